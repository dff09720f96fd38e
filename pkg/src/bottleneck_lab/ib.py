"""Information Bottleneck and conditional-entropy-bound (CEB) functions.

Everything here is in bits.  The CEB function

    F(q, x) = min H(Y|W)  s.t.  H(X|W) >= x,  W - X - Y

is evaluated through the lower convex envelope ``psi(., lam)`` of the
potential ``phi(p, lam) = h(Tp) - lam h(p)`` on the simplex:
``F(q, x) = max_{0 <= lam <= 1} psi(q, lam) + lam x``.  The IB value is
``R(q, C) = h(Tq) - F(q, h(q) - C)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog, minimize_scalar
from scipy.spatial import ConvexHull

from . import kernels
from ._parallel import pmap
from .config import DEFAULT_CONFIG, SolverConfig
from .grid import capped_resolution, grid_entropies
from .prob import (
    ChannelMatrix,
    as_channel,
    basis,
    circulant_from_noise,
    conditional_entropy,
    entropy,
    hamming_channel,
    mutual_information,
    prob_vector,
    uniform,
)
from .symmetry import cyclic_shifts_orbit, orbit

ENDPOINT_TOL = 1e-12
TIE_TOL = 1e-11
MAX_ENVELOPE_DIM = 4
MIN_ENVELOPE_RES = 50
ENVELOPE_POINTS = 250_000
GOLDEN_TOL = 1e-10
N_TRACE = 200
MAX_ORBIT_DIM = 6
MATCH_TOL = 1e-7

STREAM_PHI = 1


def _check_lambda(lam):
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")


def phi(T, p, lam: float) -> float:
    """h(Tp) - lam * h(p) in bits."""
    _check_lambda(lam)
    T = as_channel(T)
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != T.input_dim:
        raise ValueError("dimension mismatch between channel and distribution")
    return entropy(T.entries @ p) - lam * entropy(p)


@dataclass(frozen=True)
class PhiSample:
    p: np.ndarray
    lam: float
    value: float


def _phi_candidates(T: ChannelMatrix, lam, cfg, sign):
    n = T.input_dim
    res = capped_resolution(n, cfg.grid_res)
    P, hT, hp = grid_entropies(T, res)
    vals = sign * (hT - lam * hp)
    top = np.argsort(vals, kind="stable")[:4]
    starts = [P[i] for i in top]
    starts += [cfg.rng(STREAM_PHI, r).dirichlet(np.ones(n)) for r in range(cfg.restarts)]
    Tm = T.entries

    def run(p0):
        return kernels.phi_descent(Tm, p0, lam, sign, cfg.max_iters, cfg.step_tolerance)

    return [(sign * v, p) for p, v, _ in pmap(run, starts)]


def _optimize_phi(T, lam, cfg, sign):
    _check_lambda(lam)
    T = as_channel(T)
    cands = _phi_candidates(T, lam, cfg, sign)
    best_val = min(v for v, _ in cands)
    best = [p for v, p in cands if v <= best_val + TIE_TOL]
    # symmetric channels have orbit-degenerate optima; pick a canonical member
    if T.input_dim <= MAX_ORBIT_DIM:
        group = T.symmetry.input_group
        best = [img for p in best for img in orbit(p, group)]
    p = min(best, key=lambda v: tuple(np.round(v, 9)))
    p = prob_vector(np.clip(p, 0.0, None) / np.sum(np.clip(p, 0.0, None)))
    return PhiSample(p, float(lam), phi(T, p, lam))


def minimize_phi(T, lam: float, cfg: SolverConfig = DEFAULT_CONFIG) -> PhiSample:
    """Global minimiser of phi(., lam): grid sweep plus multistart descent."""
    return _optimize_phi(T, lam, cfg, 1.0)


def maximize_phi(T, lam: float, cfg: SolverConfig = DEFAULT_CONFIG) -> PhiSample:
    return _optimize_phi(T, lam, cfg, -1.0)


# ------------------------------------------------------------------ envelope

@dataclass(frozen=True)
class EnvelopeGraph:
    """Lower convex hull of the lifted grid {(p, phi(p, lam))}.

    ``slopes``/``intercepts`` describe the lower facets as affine functions
    of the first n-1 coordinates; the envelope is their pointwise maximum.
    """

    lam: float
    points: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    facets: np.ndarray

    def evaluate(self, q) -> float:
        q = np.asarray(q, dtype=float)
        if self.slopes.shape[1] == 0:
            return float(self.intercepts.max())
        return float(np.max(self.slopes @ q[:-1] + self.intercepts))

    def evaluate_many(self, Q) -> np.ndarray:
        Q = np.asarray(Q, dtype=float)
        return np.max(Q[:, :-1] @ self.slopes.T + self.intercepts, axis=1)

    def decompose(self, q):
        """Grid points and barycentric weights of the facet supporting ``q``."""
        q = np.asarray(q, dtype=float)
        k = int(np.argmax(self.slopes @ q[:-1] + self.intercepts)) if self.slopes.shape[1] else 0
        idx = self.facets[k]
        A = np.vstack([self.points[idx].T, np.ones(len(idx))])
        w, *_ = np.linalg.lstsq(A, np.append(q, 1.0), rcond=None)
        return self.points[idx], w


def lower_convex_envelope(T, lam: float, grid_res: int = 200) -> EnvelopeGraph:
    T = as_channel(T)
    _check_lambda(lam)
    n = T.input_dim
    if n > MAX_ENVELOPE_DIM:
        raise ValueError(
            f"envelope path supports input alphabets up to {MAX_ENVELOPE_DIM}; "
            "use reduced_ib for circulant channels or the oracle otherwise"
        )
    if grid_res < MIN_ENVELOPE_RES:
        raise ValueError(f"grid_res must be at least {MIN_ENVELOPE_RES}")
    res = max(MIN_ENVELOPE_RES, capped_resolution(n, grid_res, ENVELOPE_POINTS))
    return _envelope_cached(T, float(lam), res)


@lru_cache(maxsize=512)
def _envelope_cached(T: ChannelMatrix, lam: float, res: int) -> EnvelopeGraph:
    n = T.input_dim
    P, hT, hp = grid_entropies(T, res)
    vals = hT - lam * hp
    if n == 1:
        return EnvelopeGraph(lam, P, vals, np.zeros((1, 0)), vals[:1].copy(), np.zeros((1, 1), dtype=int))
    X = P[:, :-1]
    # an apex above the centroid keeps the lifted cloud full-dimensional
    apex = np.append(X.mean(axis=0), vals.max() + 1.0)
    hull = ConvexHull(np.vstack([np.column_stack([X, vals]), apex]))
    eq = hull.equations
    lower = eq[:, -2] < -1e-12
    normals, offsets = eq[lower, :-2], eq[lower, -1]
    c = eq[lower, -2]
    slopes = -normals / c[:, None]
    intercepts = -offsets / c
    return EnvelopeGraph(lam, P, vals, slopes, intercepts, hull.simplices[lower])


# --------------------------------------------------------------- CEB and IB

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a: float, b: float, tol: float = GOLDEN_TOL):
    """Maximise a unimodal ``f`` on [a, b]; returns ``(argmax, max)``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def ceb_solve(T, q, x: float, cfg: SolverConfig = DEFAULT_CONFIG):
    """Return ``(F(q, x), lam)`` with ``lam`` the maximising multiplier."""
    T = as_channel(T)
    q = prob_vector(q, T.input_dim)
    hq = entropy(q)
    if x < -ENDPOINT_TOL or x > hq + ENDPOINT_TOL:
        raise ValueError(f"x must lie in [0, H(X)] = [0, {hq}], got {x}")
    hyx = conditional_entropy(T, q)
    hy = entropy(T.entries @ q)
    x = min(max(x, 0.0), hq)

    def f(lam):
        # hull of the grid plus q itself, evaluated at q
        env = min(lower_convex_envelope(T, lam, cfg.grid_res).evaluate(q), phi(T, q, lam))
        return env + lam * x

    lam, val = golden_section_max(f, 0.0, 1.0)
    for edge in (0.0, 1.0):
        fe = f(edge)
        if fe > val:
            lam, val = edge, fe
    # the endpoints are identities; don't let facet roundoff move them
    if x == 0.0:
        val = hyx
    elif x == hq:
        val = hy
    return float(np.clip(val, hyx, hy)), float(lam)


def ceb_value(T, q, x: float, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    return ceb_solve(T, q, x, cfg)[0]


@dataclass(frozen=True)
class IBSolution:
    C: float
    R: float
    method: str
    noise_vector: np.ndarray | None = None
    test_channel: np.ndarray | None = None
    beta: float | None = None
    lam: float | None = None


def _check_budget(C, upper):
    if C < -ENDPOINT_TOL or C > upper + ENDPOINT_TOL:
        raise ValueError(f"C must lie in [0, {upper}], got {C}")
    return float(min(max(C, 0.0), upper))


def ib_value(T, q, C: float, cfg: SolverConfig = DEFAULT_CONFIG) -> IBSolution:
    """max I(W;Y) subject to I(W;X) <= C, through the CEB envelope."""
    T = as_channel(T)
    q = prob_vector(q, T.input_dim)
    hq = entropy(q)
    C = _check_budget(C, hq)
    F, lam = ceb_solve(T, q, hq - C, cfg)
    R = entropy(T.entries @ q) - F
    R = float(np.clip(R, 0.0, min(C, mutual_information(T, q))))
    return IBSolution(C, R, "envelope", lam=lam)


# -------------------------------------------------------- circulant reduction

@dataclass(frozen=True)
class _Trace:
    lams: np.ndarray
    samples: tuple
    h_v: np.ndarray
    h_tv: np.ndarray


@lru_cache(maxsize=64)
def _phi_trace(T: ChannelMatrix, cfg: SolverConfig, count: int) -> _Trace:
    lams = np.linspace(0.0, 1.0, count)
    samples = tuple(minimize_phi(T, lam, cfg) for lam in lams)
    h_v = np.array([entropy(s.p) for s in samples])
    h_tv = np.array([entropy(T.entries @ s.p) for s in samples])
    return _Trace(lams, samples, h_v, h_tv)


def _lower_hull_1d(xs, ys):
    """Lower convex hull of planar points, returned sorted by x."""
    pts = sorted(set(zip(xs.tolist(), ys.tolist())))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    hx, hy = zip(*hull)
    return np.array(hx), np.array(hy)


def _lambda_for_entropy(T, trace, x, cfg, tol=1e-9):
    """Lagrangian minimiser p*(lam) with h(p*) = x, or ``None`` across a jump."""
    h = trace.h_v
    hit = np.nonzero(np.abs(h - x) <= tol)[0]
    if hit.size:
        return trace.samples[int(hit[0])]
    above = np.nonzero(h > x)[0]
    if above.size == 0 or above[0] == 0:
        return None
    i = int(above[0])
    lo, hi = trace.lams[i - 1], trace.lams[i]
    best = None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        s = minimize_phi(T, mid, cfg)
        hs = entropy(s.p)
        if best is None or abs(hs - x) < abs(entropy(best.p) - x):
            best = s
        if abs(hs - x) <= tol * 0.1:
            break
        if hs < x:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    if abs(entropy(best.p) - x) <= tol:
        return best
    return None


def reduced_ib(z, C: float, cfg: SolverConfig = DEFAULT_CONFIG) -> IBSolution:
    """IB for the modulo-additive channel with noise ``z`` and uniform input.

    Searches noise laws v with h(v) >= log n - C minimising h(v * z) through
    a Lagrangian sweep of minimize_phi, its lower convex hull, and a
    bisection in lambda that recovers the achieving v when the traced curve
    is continuous at the target.
    """
    z = prob_vector(z)
    n = z.size
    logn = math.log2(n)
    C = _check_budget(C, logn)
    T = circulant_from_noise(z)
    if C <= ENDPOINT_TOL:
        u = uniform(n)
        return IBSolution(C, 0.0, "reduced", noise_vector=u, test_channel=circulant_from_noise(u).entries)
    if C >= logn - ENDPOINT_TOL:
        e = basis(n, 0)
        return IBSolution(C, logn - entropy(z), "reduced", noise_vector=e, test_channel=np.eye(n))
    x = logn - C
    trace = _phi_trace(T, cfg, N_TRACE)
    xs = np.concatenate([trace.h_v, [logn, 0.0]])
    ys = np.concatenate([trace.h_tv, [logn, entropy(z)]])
    hx, hy = _lower_hull_1d(xs, ys)
    y_env = float(np.interp(x, hx, hy))
    s = _lambda_for_entropy(T, trace, x, cfg, tol=MATCH_TOL)
    if s is not None:
        # lam is the slope of the supporting line, so this corrects h(v) != x to first order
        y = entropy(T.entries @ s.p) + s.lam * (x - entropy(s.p))
        if y <= y_env + 1e-9:
            v = s.p
            return IBSolution(C, logn - y, "reduced", noise_vector=v,
                              test_channel=circulant_from_noise(v).entries, lam=s.lam)
    return IBSolution(C, logn - y_env, "reduced")


# ------------------------------------------------------------ Hamming channel

def _xlog2x(t):
    return 0.0 if t <= 0.0 else t * math.log2(t)


def g_n(n: int, beta: float) -> float:
    """log n - h(beta e + (1 - beta) u_n), in bits."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    return (n - 1) / n * _xlog2x(1.0 - beta) + _xlog2x(beta * n + 1.0 - beta) / n


def invert_g_n(n: int, C: float) -> float:
    logn = math.log2(n)
    if C < -ENDPOINT_TOL or C > logn + ENDPOINT_TOL:
        raise ValueError(f"C must lie in [0, log2 {n}], got {C}")
    if C <= 0.0:
        return 0.0
    if C >= logn:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if g_n(n, mid) < C:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class HammingSolution:
    n: int
    alpha: float
    beta: float
    v: np.ndarray
    C: float
    R: float


def hamming_ib(n: int, alpha: float, C: float) -> HammingSolution:
    """Closed-form IB for the n-ary Hamming channel with uniform input.

    R = log n - h(T_alpha v) with v = beta e + (1 - beta) u_n and
    beta = g_n^{-1}(C).  Expanded, the second term carries a factor n - 1:
    ((1 + (n-1) a b)/n) log(1 + (n-1) a b) + ((n-1)(1 - a b)/n) log(1 - a b).
    """
    T = hamming_channel(n, alpha)
    C = _check_budget(C, math.log2(n))
    beta = invert_g_n(n, C)
    v = prob_vector(beta * basis(n, 0) + (1.0 - beta) * uniform(n))
    R = math.log2(n) - entropy(T.entries @ v)
    return HammingSolution(n, float(alpha), beta, v, C, max(0.0, R))


def _hamming_tangent_point(n, alpha):
    """argmax of R(C)/C; zero when the ratio is largest at the origin."""
    logn = math.log2(n)
    cs = np.linspace(logn / 400, logn, 400)
    ratio = np.array([hamming_ib(n, alpha, c).R / c for c in cs])
    i = int(np.argmax(ratio))
    if i == 0 or alpha in (0.0, 1.0):
        return 0.0
    lo, hi = cs[i - 1], cs[min(i + 1, len(cs) - 1)]
    res = minimize_scalar(lambda c: -hamming_ib(n, alpha, c).R / c, bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    return float(res.x)


@lru_cache(maxsize=128)
def _tangent_cached(n, alpha):
    return _hamming_tangent_point(n, alpha)


def hamming_ib_hull(n: int, alpha: float, C: float):
    """Upper concave hull of ``hamming_ib`` in C.

    For n >= 3 the closed form bends upward near C = 0.  Below the point C_t
    where the line from the origin touches it, time-sharing the closed-form
    channel at C_t with a constant W is better.  Returns (R, C_t); C_t = 0
    when no time-sharing is needed at this C.
    """
    C = _check_budget(C, math.log2(n))
    ct = _tangent_cached(int(n), float(alpha))
    if 0.0 < C < ct:
        return hamming_ib(n, alpha, ct).R * C / ct, ct
    return hamming_ib(n, alpha, C).R, 0.0


def hamming_rate_formula(n: int, alpha: float, beta: float) -> float:
    """The expanded closed form of ``hamming_ib`` for a given beta."""
    ab = alpha * beta
    return (_xlog2x(1.0 + (n - 1) * ab) + (n - 1) * _xlog2x(1.0 - ab)) / n


# --------------------------------------------------------- set membership

@dataclass(frozen=True)
class QMembership:
    contained: bool
    lam: float | None = None
    p_star: np.ndarray | None = None
    orbit: tuple = ()
    weights: np.ndarray | None = None

    def __bool__(self):
        return self.contained


def set_Q_contains(T, q, C: float, lambda_grid=None, cfg: SolverConfig = DEFAULT_CONFIG,
                   tol: float = 1e-6) -> QMembership:
    """Is ``q`` a mixture of the orbit of p*(lam) with log n - h(p*) = C?"""
    T = as_channel(T)
    g = T.symmetry
    if not g.input_transitive:
        raise ValueError("set membership is defined for input-symmetric channels only")
    n = T.input_dim
    q = prob_vector(q, n)
    logn = math.log2(n)
    if C < -tol or C > logn + tol:
        return QMembership(False)
    lams = np.linspace(0.0, 1.0, 51) if lambda_grid is None else np.sort(np.asarray(lambda_grid, float))
    samples = tuple(minimize_phi(T, lam, cfg) for lam in lams)
    trace = _Trace(lams, samples, np.array([entropy(s.p) for s in samples]), np.zeros(len(lams)))
    s = _lambda_for_entropy(T, trace, logn - C, cfg, tol=tol)
    if s is None:
        return QMembership(False)
    orb = cyclic_shifts_orbit(s.p, g)
    M = np.column_stack(orb)
    w = np.full(len(orb), 1.0 / len(orb))
    if np.max(np.abs(M @ w - q)) > 1e-9:
        A_eq = np.vstack([M, np.ones(len(orb))])
        b_eq = np.append(q, 1.0)
        res = linprog(np.zeros(len(orb)), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if res.status != 0 or np.max(np.abs(A_eq @ res.x - b_eq)) > 1e-8:
            return QMembership(False, s.lam, s.p, tuple(orb))
        w = res.x
    return QMembership(True, s.lam, s.p, tuple(orb), w)
