"""Finite probability primitives: simplex vectors, channels, entropies.

Channels are column stochastic: column ``i`` of ``T`` is the law of ``Y``
given ``X = i``, so ``T @ p`` is the output distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

EntropyUnit = Literal["bits", "nats"]

NORMALIZE_TOL = 1e-9
COLUMN_TOL = 1e-9


class ChannelError(ValueError):
    """Raised for malformed channel matrices."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


def _log(x, unit):
    if unit == "bits":
        return np.log2(x)
    if unit == "nats":
        return np.log(x)
    raise ValueError(f"unknown entropy unit {unit!r}")


def unit_scale(unit: EntropyUnit) -> float:
    """Multiplier converting a value in bits into ``unit``."""
    if unit == "bits":
        return 1.0
    if unit == "nats":
        return math.log(2.0)
    raise ValueError(f"unknown entropy unit {unit!r}")


def prob_vector(values, dim: int | None = None) -> np.ndarray:
    """Validate and return a read-only probability vector.

    Vectors within 1e-9 of summing to one are renormalised; anything else
    (negative mass, wrong total, wrong dimension) is rejected.
    """
    p = np.array(values, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"probability vector must be one-dimensional, got shape {p.shape}")
    if p.size == 0:
        raise ValueError("probability vector must be non-empty")
    if dim is not None and p.size != dim:
        raise ValueError(f"expected a vector of dimension {dim}, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise ValueError("probability vector has non-finite entries")
    if np.any(p < -NORMALIZE_TOL):
        raise ValueError("probability vector has negative entries")
    total = p.sum()
    if abs(total - 1.0) > NORMALIZE_TOL:
        raise ValueError(f"probability vector sums to {float(total):.12g}, not 1")
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    p.setflags(write=False)
    return p


def uniform(n: int) -> np.ndarray:
    return prob_vector(np.full(n, 1.0 / n))


def basis(n: int, i: int = 0) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return prob_vector(e)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """An m x n column-stochastic matrix (n inputs, m outputs)."""

    entries: np.ndarray

    def __post_init__(self):
        T = np.array(self.entries, dtype=float)
        if T.ndim != 2 or T.size == 0:
            raise ChannelError("channel matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(T)):
            raise ChannelError("channel matrix has non-finite entries")
        if np.any(T < 0):
            raise ChannelError("channel matrix has negative entries")
        sums = T.sum(axis=0)
        bad = np.nonzero(np.abs(sums - 1.0) > COLUMN_TOL)[0]
        if bad.size:
            j = int(bad[0])
            raise ChannelError(f"column {j} sums to {float(sums[j]):.12g}, not 1", column=j)
        T.setflags(write=False)
        object.__setattr__(self, "entries", T)

    @property
    def input_dim(self) -> int:
        return self.entries.shape[1]

    @property
    def output_dim(self) -> int:
        return self.entries.shape[0]

    @property
    def shape(self):
        return self.entries.shape

    def column(self, i: int) -> np.ndarray:
        return self.entries[:, i]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, ChannelMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash((self.shape, self.entries.tobytes()))

    def allclose(self, other, tol=1e-12) -> bool:
        other = as_channel(other)
        return self.shape == other.shape and bool(np.allclose(self.entries, other.entries, atol=tol, rtol=0))

    @cached_property
    def symmetry(self):
        """Symmetry group of the channel, computed on first access."""
        from .symmetry import find_symmetry_group

        return find_symmetry_group(self)

    # text format: "m n" then m rows of n numbers
    def to_text(self) -> str:
        m, n = self.shape
        rows = [" ".join(f"{v:.17g}" for v in row) for row in self.entries]
        return f"{m} {n}\n" + "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ChannelMatrix":
        lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln and not ln.startswith("#")]
        if not lines:
            raise ChannelError("empty channel file")
        try:
            m, n = (int(tok) for tok in lines[0].split())
        except ValueError as exc:
            raise ChannelError(f"bad header line {lines[0]!r}; expected 'm n'") from exc
        if len(lines) - 1 != m:
            raise ChannelError(f"expected {m} rows, found {len(lines) - 1}")
        rows = []
        for k, ln in enumerate(lines[1:]):
            vals = [float(tok) for tok in ln.split()]
            if len(vals) != n:
                raise ChannelError(f"row {k} has {len(vals)} entries, expected {n}")
            rows.append(vals)
        return cls(np.array(rows))


def as_channel(T) -> ChannelMatrix:
    return T if isinstance(T, ChannelMatrix) else ChannelMatrix(np.asarray(T, dtype=float))


def read_channel(path) -> ChannelMatrix:
    with open(path, encoding="utf-8") as fh:
        return ChannelMatrix.from_text(fh.read())


def read_prob_vector(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return prob_vector([float(tok) for tok in fh.read().split()])


# --------------------------------------------------------------- entropies

def entropy(p, unit: EntropyUnit = "bits") -> float:
    """Shannon entropy with the 0 log 0 = 0 convention."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(max(0.0, -np.sum(nz * _log(nz, unit))))


def entropies(P, unit: EntropyUnit = "bits") -> np.ndarray:
    """Row-wise entropies of a stack of distributions (shape ``(..., n)``)."""
    P = np.asarray(P, dtype=float)
    safe = np.where(P > 0, P, 1.0)
    return -np.sum(P * _log(safe, unit), axis=-1)


def _check_dims(T: ChannelMatrix, p):
    if np.shape(p)[-1] != T.input_dim:
        raise ValueError(f"input distribution has dimension {np.shape(p)[-1]}, channel expects {T.input_dim}")


def push_forward(T, p) -> np.ndarray:
    T = as_channel(T)
    _check_dims(T, p)
    return prob_vector(T.entries @ np.asarray(p, dtype=float))


def conditional_entropy(T, q, unit: EntropyUnit = "bits") -> float:
    """H(Y|X) for input law ``q``."""
    T = as_channel(T)
    _check_dims(T, q)
    cols = entropies(T.entries.T, unit)
    return float(np.dot(np.asarray(q, dtype=float), cols))


def mutual_information(T, q, unit: EntropyUnit = "bits") -> float:
    T = as_channel(T)
    _check_dims(T, q)
    q = np.asarray(q, dtype=float)
    return max(0.0, entropy(T.entries @ q, unit) - conditional_entropy(T, q, unit))


# ------------------------------------------------------------ constructors

def circulant_from_noise(z) -> ChannelMatrix:
    """Channel of Y = X + Z (mod n); column ``i`` is ``z`` shifted down by ``i``."""
    z = prob_vector(z)
    n = z.size
    return ChannelMatrix(np.column_stack([np.roll(z, i) for i in range(n)]))


def hamming_channel(n: int, alpha: float) -> ChannelMatrix:
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return ChannelMatrix(alpha * np.eye(n) + (1.0 - alpha) / n * np.ones((n, n)))


def hamming_noise(n: int, alpha: float) -> np.ndarray:
    z = np.full(n, (1.0 - alpha) / n)
    z[0] += alpha
    return prob_vector(z)


def tito_channel(alpha: float, beta: float) -> ChannelMatrix:
    """Ternary circulant with noise law (1 - alpha - beta, alpha, beta).

    Read row-wise (row x is the law of Y given X = x) this is the familiar
    printed three-input three-output matrix; stored column-wise it is the
    circulant generated by the noise vector.
    """
    if alpha < 0 or beta < 0 or alpha + beta > 1:
        raise ValueError("need alpha, beta >= 0 and alpha + beta <= 1")
    return circulant_from_noise([1.0 - alpha - beta, alpha, beta])


def bsc(delta: float) -> ChannelMatrix:
    if not 0.0 <= delta <= 1.0:
        raise ValueError("crossover must lie in [0, 1]")
    return bms_channel([1.0 - delta, delta])


def bms_channel(z) -> ChannelMatrix:
    """Binary-input symmetric channel with columns ``z`` and ``z`` reversed."""
    z = prob_vector(z)
    if z.size < 2:
        raise ValueError("output alphabet must have at least two symbols")
    return ChannelMatrix(np.column_stack([z, z[::-1]]))


def cyclic_convolve(v, z) -> np.ndarray:
    """Law of V + Z (mod n) for independent V ~ v, Z ~ z."""
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    if v.shape != z.shape:
        raise ValueError("cyclic_convolve needs vectors of equal dimension")
    n = v.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return prob_vector(z[idx] @ v)


def binary_entropy(x: float) -> float:
    return entropy([x, 1.0 - x])
