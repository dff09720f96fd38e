"""Brute-force optimisers over test channels P(W|X).

Nothing here uses channel symmetry; these are the independent references
for the closed forms in ``ib`` and ``pf`` and the only path outside their
regimes.  Search is multistart projected gradient on products of simplices
with augmented-Lagrangian continuation, followed by an exact feasibility
repair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from ._parallel import pmap
from ._pykernels import _pgd, project_simplex
from .config import DEFAULT_CONFIG, SolverConfig
from .prob import as_channel, entropy, mutual_information, prob_vector

RHO_SCHEDULE = (1.0, 10.0, 100.0, 1000.0)
SWEEP_GAMMAS = tuple(np.geomspace(1e-3, 1.0, 24))
SWEEP_STARTS = 8
WARM_STARTS = 24
POLISH_STEPS = 60
COLUMN_TOL = 1e-12

START_CONCENTRATIONS = (1.0, 0.1)
REFINE_ROUNDS = 8
REFINE_GAP = 0.02

STREAM_IB = 11
STREAM_PF = 12
STREAM_CEB = 13
STREAM_SWEEP = 14

MODE_NONE, MODE_INEQ, MODE_EQ = 0, 1, 2


@dataclass(frozen=True)
class TestChannel:
    """k x n column-stochastic matrix with forward[w, x] = P(W=w | X=x)."""

    __test__ = False  # not a pytest class

    forward: np.ndarray

    def __post_init__(self):
        F = np.array(self.forward, dtype=float)
        if F.ndim != 2 or F.shape[0] < 1:
            raise ValueError("test channel must be a k x n matrix with k >= 1")
        if np.any(F < -COLUMN_TOL) or np.any(np.abs(F.sum(axis=0) - 1.0) > 1e-9):
            raise ValueError("test channel columns must be probability vectors")
        F = np.clip(F, 0.0, None)
        F = F / F.sum(axis=0, keepdims=True)
        F.setflags(write=False)
        object.__setattr__(self, "forward", F)

    @property
    def cardinality(self) -> int:
        return self.forward.shape[0]


@dataclass(frozen=True)
class OracleResult:
    value: float
    channel: TestChannel
    achieved_constraint: float
    converged: bool
    problem: str = ""
    target: float = 0.0
    cloud: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)), repr=False)
    envelope_value: float | None = None

    def to_dict(self):
        return {
            "problem": self.problem,
            "target": self.target,
            "value": self.value,
            "achieved_constraint": self.achieved_constraint,
            "converged": self.converged,
            "cardinality": self.channel.cardinality,
            "channel": self.channel.forward.tolist(),
            "envelope_value": self.envelope_value,
        }


def joint_rates(T, q, pc):
    """(I(X;W), I(Y;W)) in bits for W - X - Y with X ~ q."""
    T = as_channel(T)
    q = prob_vector(q, T.input_dim)
    F = pc.forward if isinstance(pc, TestChannel) else np.asarray(pc, dtype=float)
    if F.shape[1] != T.input_dim:
        raise ValueError("test channel input dimension does not match the channel")
    ixw, iyw, _, _ = kernels.channel_rates(T.entries, q, np.ascontiguousarray(F))
    return max(0.0, ixw), max(0.0, iyw)


def _random_channel(rng, k, n, conc=1.0):
    return rng.dirichlet(np.full(k, conc), size=n).T.copy()


def _start(stream, cfg, k, n, r):
    # alternate flat and sparse Dirichlet draws; sparse ones land near vertices
    return _random_channel(cfg.rng(stream, k, r), k, n, START_CONCENTRATIONS[r % 2])


def _canonical(P):
    """Sort the rows so relabellings of W compare equal."""
    order = sorted(range(P.shape[0]), key=lambda w: tuple(-P[w]))
    return np.ascontiguousarray(P[order])


def _tangent(g):
    return g - g.mean(axis=0, keepdims=True)


def _project_onto_level(T, q, P, C, tol, inequality):
    """Newton steps along grad I(X;W) towards I(X;W) = C."""
    for _ in range(POLISH_STEPS):
        ixw, _, gx, _ = kernels.channel_rates(T, q, P)
        viol = ixw - C
        if (inequality and viol <= 0.0) or abs(viol) <= tol:
            break
        d = _tangent(gx)
        nrm = float(np.sum(d * d))
        if nrm <= 1e-300:
            break
        P = kernels.project_columns(P - viol * d / nrm)
    return np.ascontiguousarray(P)


def _shrink_to_budget(T, q, P, C):
    """Mix with the constant channel until I(X;W) <= C (I(X;W) is convex in P)."""
    ixw, _, _, _ = kernels.channel_rates(T, q, P)
    if ixw <= C:
        return P
    const = np.repeat((P @ q)[:, None], P.shape[1], axis=1)
    lo, hi = 0.0, 1.0
    for _ in range(80):
        t = 0.5 * (lo + hi)
        Pt = (1.0 - t) * P + t * const
        if kernels.channel_rates(T, q, Pt)[0] <= C:
            hi = t
        else:
            lo = t
    return np.ascontiguousarray((1.0 - hi) * P + hi * const)


def _multiplier_estimate(T, q, P, a):
    """Least-squares multiplier for grad(a I_YW) + mu grad(I_XW) = 0 on the tangent space."""
    _, _, gx, gy = kernels.channel_rates(T, q, P)
    dx, dy = _tangent(gx), _tangent(gy)
    nrm = float(np.sum(dx * dx))
    return -a * float(np.sum(dx * dy)) / nrm if nrm > 1e-300 else 0.0


def _al_descent(T, q, P, a, C, mode, cfg):
    mu = _multiplier_estimate(T, q, P, a)
    if mode == MODE_INEQ:
        mu = max(0.0, mu)
    for rho in RHO_SCHEDULE:
        P, _, _ = kernels.channel_descent(T, q, P, a, 0.0, C, mu, rho, mode, cfg.max_iters, cfg.step_tolerance)
        ixw = kernels.channel_rates(T, q, P)[0]
        mu = mu + rho * (ixw - C)
        if mode == MODE_INEQ:
            mu = max(0.0, mu)
    return np.ascontiguousarray(P)


def _upper_concave_at(cloud, x):
    """Upper concave envelope of planar points evaluated at ``x``."""
    pts = sorted(set(map(tuple, np.round(cloud, 15).tolist())))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    hx, hy = np.array(hull).T
    if x < hx[0] or x > hx[-1]:
        return None
    return float(np.interp(x, hx, hy))


def _select(cands, maximize):
    """Best (value, P) by value, then lexicographically smallest channel."""
    sign = -1.0 if maximize else 1.0
    best = min(sign * v for v, _ in cands)
    tied = [P for v, P in cands if sign * v <= best + 1e-12]
    P = min(tied, key=lambda M: tuple(M.ravel()))
    return sign * best, P


def _check_common(T, q, C, k, kmax, name):
    T = as_channel(T)
    q = prob_vector(q, T.input_dim)
    if not 1 <= k <= kmax:
        raise ValueError(f"{name} cardinality must lie in [1, {kmax}], got {k}")
    hq = entropy(q)
    if C < -1e-12 or C > hq + 1e-12:
        raise ValueError(f"constraint must lie in [0, H(X)] = [0, {hq}], got {C}")
    return T, q, float(min(max(C, 0.0), hq))


# ----------------------------------------------------------------------- IB

def ib_sweep(T, q, k, cfg: SolverConfig = DEFAULT_CONFIG):
    """Lagrangian sweep: maximisers of I(Y;W) - gamma I(X;W) over gamma.

    Starts from a log grid, then bisects gamma wherever neighbouring optima
    leave a gap in I(X;W).  Returns every local solution found.
    """
    T = as_channel(T)
    q = prob_vector(q, T.input_dim)
    return list(_sweep_cached(T, tuple(q), int(k), cfg))


@lru_cache(maxsize=64)
def _sweep_cached(T, q, k, cfg):
    q = np.array(q)
    A, n = T.entries, T.input_dim

    def solve(gamma, warm):
        def run(j):
            P0 = warm[j - SWEEP_STARTS] if j >= SWEEP_STARTS else _start(STREAM_SWEEP, cfg, k, n, j)
            P, f, _ = kernels.channel_descent(A, q, P0, -1.0, gamma, 0.0, 0.0, 1.0, MODE_NONE,
                                              cfg.max_iters, cfg.step_tolerance)
            return f, P

        found = pmap(run, range(SWEEP_STARTS + len(warm)))
        best = min(found, key=lambda fp: fp[0])[1]
        return best, [P for _, P in found]

    best, out = {}, []
    for g in SWEEP_GAMMAS:
        best[g], sols = solve(g, [])
        out.extend(sols)
    for _ in range(REFINE_ROUNDS):
        gs = sorted(best)
        ixw = [kernels.channel_rates(A, q, best[g])[0] for g in gs]
        new = [(g0, g1) for g0, g1, a, b in zip(gs, gs[1:], ixw, ixw[1:]) if abs(a - b) > REFINE_GAP]
        if not new:
            break
        for g0, g1 in new:
            g = math.sqrt(g0 * g1)
            best[g], sols = solve(g, [best[g0], best[g1]])
            out.extend(sols)
    for P in out:
        P.setflags(write=False)
    return tuple(out)


def ib_oracle(T, q, C: float, k: int, cfg: SolverConfig = DEFAULT_CONFIG) -> OracleResult:
    """max I(W;Y) subject to I(W;X) <= C over k-ary test channels."""
    T, q, C = _check_common(T, q, C, k, max(as_channel(T).input_dim + 8, k), "IB")
    A, n = T.entries, T.input_dim
    sweep = ib_sweep(T, q, k, cfg)
    rates = np.array([kernels.channel_rates(A, q, P)[:2] for P in sweep])
    cloud = np.vstack([rates, [[0.0, 0.0]]])
    below = [i for i in range(len(sweep)) if rates[i, 0] <= C]
    # warm starts: sweep points nearest the budget, pulled inside it
    near = np.argsort(np.abs(rates[:, 0] - C), kind="stable")[:WARM_STARTS]
    warm = [_shrink_to_budget(A, q, sweep[i], C) for i in near]
    starts = warm + [_start(STREAM_IB, cfg, k, n, r) for r in range(cfg.restarts)]

    def run(P0):
        P = _al_descent(A, q, P0, -1.0, C, MODE_INEQ, cfg)
        P = _project_onto_level(A, q, P, C, 1e-13, inequality=True)
        P = _shrink_to_budget(A, q, P, C)
        return _canonical(P)

    cands = []
    for P in [*pmap(run, starts), *(sweep[i] for i in below)]:
        ixw, iyw, _, _ = kernels.channel_rates(A, q, P)
        cloud = np.vstack([cloud, [ixw, iyw]])
        if ixw <= C + 1e-12:
            cands.append((iyw, _canonical(P)))
    if not cands:
        const = _canonical(np.full((k, n), 1.0 / k))
        cands.append((0.0, const))
    value, P = _select(cands, maximize=True)
    ixw, iyw = joint_rates(T, q, P)
    return OracleResult(
        value=max(0.0, value),
        channel=TestChannel(P),
        achieved_constraint=ixw,
        converged=ixw <= C + cfg.constraint_tolerance,
        problem="ib",
        target=C,
        cloud=cloud,
        envelope_value=_upper_concave_at(cloud, C),
    )


# ----------------------------------------------------------------------- PF

def _erasure_start(T, q, C, cfg, k, n, r):
    """Sparse channel on k-1 symbols mixed with a constant last row down to I(X;W) = C."""
    R = np.vstack([_random_channel(cfg.rng(STREAM_PF, k, r), k - 1, n, START_CONCENTRATIONS[1]), np.zeros(n)])
    E = np.zeros((k, n))
    E[-1] = 1.0
    if kernels.channel_rates(T, q, R)[0] <= C:
        return R
    lo, hi = 0.0, 1.0
    for _ in range(60):
        t = 0.5 * (lo + hi)
        if kernels.channel_rates(T, q, (1.0 - t) * R + t * E)[0] <= C:
            hi = t
        else:
            lo = t
    return np.ascontiguousarray((1.0 - hi) * R + hi * E)


def pf_oracle(T, q, C: float, k: int, cfg: SolverConfig = DEFAULT_CONFIG) -> OracleResult:
    """min I(W;Y) subject to I(W;X) = C over k-ary test channels."""
    T, q, C = _check_common(T, q, C, k, as_channel(T).input_dim + 1, "PF")
    A, n = T.entries, T.input_dim
    if C <= 0.0:
        P = np.full((k, n), 1.0 / k)
        return OracleResult(0.0, TestChannel(P), 0.0, True, "pf", C)
    starts = [
        _erasure_start(A, q, C, cfg, k, n, r) if r % 4 == 3 and k > 1 else _start(STREAM_PF, cfg, k, n, r)
        for r in range(cfg.restarts)
    ]

    def run(P0):
        P = _al_descent(A, q, P0, 1.0, C, MODE_EQ, cfg)
        return _canonical(_project_onto_level(A, q, P, C, 1e-12, inequality=False))

    cloud, feasible, rest = [], [], []
    for P in pmap(run, starts):
        ixw, iyw, _, _ = kernels.channel_rates(A, q, P)
        cloud.append((ixw, iyw))
        (feasible if abs(ixw - C) <= cfg.constraint_tolerance else rest).append((iyw, P))
    converged = bool(feasible)
    if converged:
        value, P = _select(feasible, maximize=False)
    else:
        # report the channel closest to the constraint surface
        P = min((P for _, P in rest), key=lambda M: abs(kernels.channel_rates(A, q, M)[0] - C))
        value = kernels.channel_rates(A, q, P)[1]
    ixw, iyw = joint_rates(T, q, P)
    return OracleResult(
        value=max(0.0, value),
        channel=TestChannel(P),
        achieved_constraint=ixw,
        converged=converged,
        problem="pf",
        target=C,
        cloud=np.array(cloud),
    )


# ---------------------------------------------------------------------- CEB

def _ceb_value_grad(A, q, x, k, n, rho, mu):
    """Objective on the decomposition (w, p_1..p_k) and its gradient (nats scaled to bits)."""
    ln2 = math.log(2.0)

    def fg(z):
        w = z[:k]
        Pc = z[k:].reshape(k, n)  # row alpha is p_alpha
        TP = Pc @ A.T  # row alpha is T p_alpha
        logTP = np.log(np.maximum(TP, 1e-300))
        logP = np.log(np.maximum(Pc, 1e-300))
        hT = -np.sum(np.where(TP > 0, TP * logTP, 0.0), axis=1) / ln2
        hP = -np.sum(np.where(Pc > 0, Pc * logP, 0.0), axis=1) / ln2
        resid = w @ Pc - q
        S = float(w @ hP)
        t = max(0.0, x - S + mu / rho)
        f = float(w @ hT) + 0.5 * rho * float(resid @ resid) + 0.5 * rho * t * t
        gw = hT + rho * (Pc @ resid) - rho * t * hP
        dhT = -(logTP + 1.0) @ A / ln2
        dhP = -(logP + 1.0) / ln2
        gP = w[:, None] * dhT + rho * np.outer(w, resid) - rho * t * w[:, None] * dhP
        return f, np.concatenate([gw, gP.ravel()])

    return fg


def _ceb_project(k, n):
    def proj(z):
        out = np.empty_like(z)
        out[:k] = project_simplex(z[:k])
        for a in range(k):
            sl = slice(k + a * n, k + (a + 1) * n)
            out[sl] = project_simplex(z[sl])
        return out

    return proj


def _decomposition_to_channel(w, Pc, q):
    J = w[:, None] * Pc
    marg = J.sum(axis=0)
    k = len(w)
    F = np.where(marg[None, :] > 0, J / np.where(marg > 0, marg, 1.0)[None, :], 1.0 / k)
    return np.ascontiguousarray(F / F.sum(axis=0, keepdims=True))


def ceb_oracle(T, q, x: float, k: int, cfg: SolverConfig = DEFAULT_CONFIG) -> OracleResult:
    """min H(Y|W) subject to H(X|W) >= x, searched over decompositions q = sum w_a p_a."""
    T = as_channel(T)
    q = prob_vector(q, T.input_dim)
    A, n = T.entries, T.input_dim
    hq = entropy(q)
    if not 1 <= k <= n:
        raise ValueError(f"CEB cardinality must lie in [1, {n}], got {k}")
    if x < -1e-12 or x > hq + 1e-12:
        raise ValueError(f"x must lie in [0, H(X)] = [0, {hq}], got {x}")
    x = min(max(x, 0.0), hq)
    budget = hq - x  # H(X|W) >= x  <=>  I(X;W) <= H(X) - x
    hy = entropy(A @ q)
    proj = _ceb_project(k, n)

    def run(r):
        rng = cfg.rng(STREAM_CEB, k, r)
        z = np.concatenate([rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(n), size=k).ravel()])
        mu = 0.0
        for rho in RHO_SCHEDULE:
            z, _, _ = _pgd(_ceb_value_grad(A, q, x, k, n, rho, mu), z, proj, cfg.max_iters, cfg.step_tolerance)
            S = float(z[:k] @ [entropy(p) for p in z[k:].reshape(k, n)])
            mu = max(0.0, mu + rho * (x - S))
        F = _decomposition_to_channel(z[:k], z[k:].reshape(k, n), q)
        F = _project_onto_level(A, q, F, budget, 1e-13, inequality=True)
        return _canonical(_shrink_to_budget(A, q, F, budget))

    cands = []
    for F in pmap(run, range(cfg.restarts)):
        ixw, iyw, _, _ = kernels.channel_rates(A, q, F)
        if ixw <= budget + 1e-12:
            cands.append((hy - iyw, F))
    value, F = _select(cands, maximize=False)
    ixw, _ = joint_rates(T, q, F)
    return OracleResult(
        value=float(np.clip(value, 0.0, hy)),
        channel=TestChannel(F),
        achieved_constraint=hq - ixw,
        converged=hq - ixw >= x - cfg.constraint_tolerance,
        problem="ceb",
        target=x,
    )


def cardinality_scan(T, q, C: float, k_range, cfg: SolverConfig = DEFAULT_CONFIG):
    """IB oracle value for each cardinality in ``k_range``."""
    return [(k, ib_oracle(T, q, C, k, cfg).value) for k in k_range]


def mutual_information_xy(T, q) -> float:
    return mutual_information(T, q)
