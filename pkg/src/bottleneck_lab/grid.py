"""Regular grids on the probability simplex."""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb

import numpy as np

from .prob import ChannelMatrix, entropies

MAX_GRID_POINTS = 250_000


def grid_size(n: int, res: int) -> int:
    return comb(res + n - 1, n - 1)


def capped_resolution(n: int, res: int, max_points: int = MAX_GRID_POINTS) -> int:
    """Largest resolution <= ``res`` whose grid has at most ``max_points`` points."""
    while res > 1 and grid_size(n, res) > max_points:
        res -= 1
    return res


@lru_cache(maxsize=32)
def simplex_grid(n: int, res: int) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of ``1/res``.

    Vertices come first in the row order only by accident of the
    enumeration; callers should not rely on ordering beyond determinism.
    """
    if n == 1:
        pts = np.ones((1, 1))
    elif n == 2:
        k = np.arange(res + 1)
        pts = np.column_stack([k, res - k]) / res
    elif n == 3:
        i, j = np.meshgrid(np.arange(res + 1), np.arange(res + 1), indexing="ij")
        keep = i + j <= res
        i, j = i[keep], j[keep]
        pts = np.column_stack([i, j, res - i - j]) / res
    else:
        rows = []
        for bars in itertools.combinations(range(res + n - 1), n - 1):
            prev, row = -1, []
            for b in bars:
                row.append(b - prev - 1)
                prev = b
            row.append(res + n - 2 - prev)
            rows.append(row)
        pts = np.array(rows, dtype=float) / res
    pts.setflags(write=False)
    return pts


@lru_cache(maxsize=64)
def grid_entropies(T: ChannelMatrix, res: int):
    """Grid points with h(Tp) and h(p) (bits) evaluated on each."""
    P = simplex_grid(T.input_dim, res)
    hT = entropies(P @ T.entries.T)
    hp = entropies(P)
    hT.setflags(write=False)
    hp.setflags(write=False)
    return P, hT, hp
