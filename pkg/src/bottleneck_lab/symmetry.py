"""Symmetry groups of stochastic matrices.

A pair (G, Pi) of permutation matrices is a symmetry of ``T`` when
``T G = Pi T``.  Permutations are stored as tuples ``sigma`` with
``G e_j = e_{sigma[j]}``, so ``(G p)[sigma[j]] = p[j]`` and ``T G`` is
``T[:, sigma]``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .prob import ChannelMatrix, as_channel, prob_vector

MAX_ENUM_DIM = 8
SYMMETRY_TOL = 1e-9


class SymmetryComplexityError(ValueError):
    """Exhaustive enumeration refused for large input alphabets."""


@dataclass(frozen=True, order=True)
class Permutation:
    mapping: tuple

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError(f"{self.mapping} is not a permutation")

    @classmethod
    def identity(cls, k):
        return cls(tuple(range(k)))

    @classmethod
    def shift(cls, k, s=1):
        """Cyclic shift sending ``j`` to ``j + s`` (mod k)."""
        return cls(tuple((j + s) % k for j in range(k)))

    def __len__(self):
        return len(self.mapping)

    def __call__(self, j):
        return self.mapping[j]

    def __mul__(self, other):
        # (self * other)(j) = self(other(j)), i.e. matrix product G1 G2
        return Permutation(tuple(self.mapping[j] for j in other.mapping))

    def inverse(self):
        inv = [0] * len(self.mapping)
        for j, s in enumerate(self.mapping):
            inv[s] = j
        return Permutation(tuple(inv))

    def is_identity(self):
        return all(j == s for j, s in enumerate(self.mapping))

    def matrix(self):
        k = len(self.mapping)
        G = np.zeros((k, k))
        G[list(self.mapping), list(range(k))] = 1.0
        return G

    def apply(self, p):
        """Return ``G p``."""
        p = np.asarray(p)
        out = np.empty_like(p)
        out[list(self.mapping)] = p
        return out

    def cycles(self):
        seen, out = set(), []
        for start in range(len(self.mapping)):
            if start in seen:
                continue
            cyc, j = [], start
            while j not in seen:
                seen.add(j)
                cyc.append(j)
                j = self.mapping[j]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def cycle_notation(self):
        cyc = self.cycles()
        if not cyc:
            return "()"
        return "".join("(" + " ".join(str(j) for j in c) + ")" for c in cyc)


@dataclass(frozen=True, order=True)
class SymmetryPair:
    input_perm: Permutation
    output_perm: Permutation

    def __mul__(self, other):
        return SymmetryPair(self.input_perm * other.input_perm, self.output_perm * other.output_perm)

    def holds_for(self, T, tol=SYMMETRY_TOL):
        T = np.asarray(T)
        lhs = T @ self.input_perm.matrix()
        rhs = self.output_perm.matrix() @ T
        return bool(np.allclose(lhs, rhs, atol=tol, rtol=0))


def _is_transitive(perms, k):
    if k == 0:
        return True
    reach = {perm(0) for perm in perms}
    return len(reach) == k


@dataclass(frozen=True)
class SymmetryGroup:
    pairs: tuple
    input_dim: int
    output_dim: int
    input_group: tuple = field(init=False)
    output_group: tuple = field(init=False)
    input_transitive: bool = field(init=False)
    output_transitive: bool = field(init=False)

    def __post_init__(self):
        ig = tuple(sorted({p.input_perm for p in self.pairs}))
        og = tuple(sorted({p.output_perm for p in self.pairs}))
        object.__setattr__(self, "input_group", ig)
        object.__setattr__(self, "output_group", og)
        # a group containing the identity is transitive iff the orbit of 0 is everything
        object.__setattr__(self, "input_transitive", _is_transitive(ig, self.input_dim))
        object.__setattr__(self, "output_transitive", _is_transitive(og, self.output_dim))

    @property
    def order(self):
        return len(self.pairs)

    @property
    def symmetric(self):
        return self.input_transitive and self.output_transitive

    def generators(self):
        """A small generating set for the pair group, chosen greedily."""
        ident = SymmetryPair(Permutation.identity(self.input_dim), Permutation.identity(self.output_dim))
        span = {ident}
        gens = []
        for pair in self.pairs:
            if pair in span:
                continue
            gens.append(pair)
            span = _closure(span | {pair}, gens)
        return gens

    def report(self):
        return {
            "order": self.order,
            "input_group_order": len(self.input_group),
            "output_group_order": len(self.output_group),
            "input_transitive": self.input_transitive,
            "output_transitive": self.output_transitive,
            "generators": [
                {"input": g.input_perm.cycle_notation(), "output": g.output_perm.cycle_notation()}
                for g in self.generators()
            ],
        }


def _closure(elements, gens):
    elements = set(elements)
    frontier = list(elements)
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = a * g
                if b not in elements:
                    elements.add(b)
                    nxt.append(b)
        frontier = nxt
    return elements


def _row_matchings(match):
    """All permutations pi with match[i, pi(i)] true, by backtracking."""
    m = match.shape[0]
    options = [np.nonzero(match[i])[0].tolist() for i in range(m)]
    if any(not o for o in options):
        return []
    out, used, assign = [], [False] * m, [0] * m

    def rec(i):
        if i == m:
            out.append(tuple(assign))
            return
        for r in options[i]:
            if not used[r]:
                used[r] = True
                assign[i] = r
                rec(i + 1)
                used[r] = False

    rec(0)
    return out


def find_symmetry_group(T, tol: float = SYMMETRY_TOL) -> SymmetryGroup:
    """Enumerate every pair (G, Pi) with T G = Pi T."""
    T = as_channel(T)
    return _find_group_cached(T, tol)


@lru_cache(maxsize=256)
def _find_group_cached(T: ChannelMatrix, tol: float) -> SymmetryGroup:
    A = T.entries
    m, n = A.shape
    if n > MAX_ENUM_DIM:
        raise SymmetryComplexityError(
            f"input alphabet of size {n} exceeds the enumeration cap of {MAX_ENUM_DIM}; "
            "build the channel with circulant_from_noise/hamming_channel instead"
        )
    pairs = []
    for sigma in itertools.permutations(range(n)):
        TG = A[:, list(sigma)]
        # row i of T must equal row pi(i) of TG
        match = np.all(np.abs(A[:, None, :] - TG[None, :, :]) <= tol, axis=2)
        for pi in _row_matchings(match):
            pairs.append(SymmetryPair(Permutation(sigma), Permutation(pi)))
    return SymmetryGroup(tuple(sorted(pairs)), n, m)


def is_input_symmetric(g: SymmetryGroup) -> bool:
    return g.input_transitive


def is_output_symmetric(g: SymmetryGroup) -> bool:
    return g.output_transitive


def is_circulant(T, tol: float = SYMMETRY_TOL):
    """Return the generating noise vector if ``T`` is circulant, else ``None``."""
    A = as_channel(T).entries
    m, n = A.shape
    if m != n:
        return None
    z = A[:, 0]
    for i in range(1, n):
        if not np.allclose(A[:, i], np.roll(z, i), atol=tol, rtol=0):
            return None
    return prob_vector(z)


def cyclic_shifts(n: int):
    """The n cyclic shifts, identity first."""
    return [Permutation.shift(n, s) for s in range(n)]


def orbit(p, perms, tol: float = 1e-12):
    """Distinct images ``G p`` for ``G`` in ``perms``, in the given order."""
    p = np.asarray(p, dtype=float)
    out = []
    for G in perms:
        img = G.apply(p)
        if not any(np.max(np.abs(img - o)) <= tol for o in out):
            out.append(img)
    return out


def cyclic_shifts_orbit(p, g: SymmetryGroup, tol: float = 1e-12):
    """Orbit of ``p`` under the input group of ``g``."""
    if np.size(p) != g.input_dim:
        raise ValueError(f"vector of dimension {np.size(p)} does not match group on {g.input_dim} symbols")
    return orbit(p, g.input_group, tol)


def regular_transversal(g: SymmetryGroup):
    """n input permutations G_1 = I, ..., G_n whose images of every symbol are distinct.

    For such a set, (1/n) sum_k G_k p is uniform for every p.  Circulant
    channels get the cyclic shifts; otherwise a Latin-square subset of the
    input group is searched for.
    """
    n = g.input_dim
    shifts = cyclic_shifts(n)
    group = set(g.input_group)
    if all(s in group for s in shifts):
        return shifts
    candidates = sorted(group)
    by_image = {}
    for G in candidates:
        by_image.setdefault(G(0), []).append(G)
    chosen = [Permutation.identity(n)]

    def compatible(G):
        return all(all(G(i) != H(i) for i in range(n)) for H in chosen)

    def rec(j):
        if j == n:
            return True
        for G in by_image.get(j, []):
            if compatible(G):
                chosen.append(G)
                if rec(j + 1):
                    return True
                chosen.pop()
        return False

    if Permutation.identity(n) in group and rec(1):
        return chosen
    raise ValueError("input group has no regular transversal; channel is not input symmetric of order n")
