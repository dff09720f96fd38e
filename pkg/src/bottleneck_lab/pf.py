"""Privacy Funnel for input-symmetric channels with uniform input.

The funnel value min I(W;Y) s.t. I(W;X) = C is linear in C up to a
threshold C*, achieved by an erasure-structured test channel built from the
touch point (lam*, p*) where the non-uniform maximiser of phi(., lam) ties
with the uniform distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._parallel import pmap
from ._pykernels import _pgd, project_simplex
from .config import DEFAULT_CONFIG, SolverConfig
from .grid import capped_resolution, grid_entropies
from .ib import maximize_phi, phi
from .prob import (
    ChannelMatrix,
    as_channel,
    basis,
    entropy,
    mutual_information,
    prob_vector,
    uniform,
)
from .symmetry import orbit, regular_transversal

DEGENERATE_GAP = 1e-8
BISECTION_STEPS = 60
PERTURB = 1e-6
LEVEL_BAND = 0.05
STREAM_SYM = 21


class OutOfRegimeError(ValueError):
    """C exceeds C*, where the erasure construction is no longer optimal."""


@dataclass(frozen=True)
class TouchPoint:
    lambda_star: float
    p_star: np.ndarray
    C_star: float
    degenerate: bool = False


@dataclass(frozen=True)
class PFSolution:
    B: np.ndarray
    w_weights: np.ndarray
    epsilon: float
    C: float
    R: float
    touch: TouchPoint

    def x_marginal(self):
        return self.B @ self.w_weights

    def rates(self, T):
        """(I(X;W), I(Y;W)) of the construction, recomputed from scratch."""
        T = as_channel(T)
        return (
            mutual_information(self.B, self.w_weights),
            mutual_information(T.entries @ self.B, self.w_weights),
        )

    def reverse_channel(self):
        """P(W|X) as an (n+1) x n column-stochastic matrix.

        The last row (the erasure symbol) is constant in x.
        """
        joint = self.B * self.w_weights[None, :]
        return (joint / joint.sum(axis=1, keepdims=True)).T


def _require_symmetric_square(T: ChannelMatrix):
    n, m = T.input_dim, T.output_dim
    if n != m:
        raise ValueError("the symmetric funnel path needs a square channel")
    if not T.symmetry.input_transitive:
        raise ValueError("channel is not input symmetric")
    u = np.full(n, 1.0 / n)
    if not np.allclose(T.entries @ u, u, atol=1e-9, rtol=0):
        raise ValueError("channel does not map the uniform law to itself")


def _canonical(p, group):
    imgs = orbit(p, group)
    return min(imgs, key=lambda v: tuple(np.round(v, 9)))


def funnel_gap(T, lam: float, cfg: SolverConfig = DEFAULT_CONFIG):
    """max_p phi(p, lam) - phi(u, lam) and the maximising sample."""
    T = as_channel(T)
    s = maximize_phi(T, lam, cfg)
    return s.value - phi(T, uniform(T.input_dim), lam), s


def find_touch_point(T, cfg: SolverConfig = DEFAULT_CONFIG) -> TouchPoint:
    T = as_channel(T)
    _require_symmetric_square(T)
    n = T.input_dim
    logn = math.log2(n)
    gap1, _ = funnel_gap(T, 1.0, cfg)
    if gap1 <= DEGENERATE_GAP:
        return TouchPoint(1.0, basis(n, 0), logn, degenerate=True)
    lo, hi = 0.0, 1.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        gap, _ = funnel_gap(T, mid, cfg)
        if gap > DEGENERATE_GAP:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            break
    lam = hi
    # at lam* both u and the orbit of p* are maximisers; nudge up to land on p*
    s = maximize_phi(T, min(1.0, lam + PERTURB), cfg)
    p, _, _ = kernels.phi_descent(T.entries, s.p, lam, -1.0, cfg.max_iters, cfg.step_tolerance)
    p = prob_vector(np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum())
    p = prob_vector(_canonical(p, T.symmetry.input_group))
    return TouchPoint(float(lam), p, logn - entropy(p))


def _erasure_solution(cols, p_star, C, C_star, R, touch):
    n = len(cols)
    B = np.column_stack(cols + [np.full(n, 1.0 / n)])
    eps = 1.0 - C / C_star if C_star > 0 else 1.0
    eps = min(1.0, max(0.0, eps))
    w = np.append(np.full(n, (1.0 - eps) / n), eps)
    return PFSolution(B, w, eps, C, R, touch)


def pf_value(T, C: float, cfg: SolverConfig = DEFAULT_CONFIG, touch: TouchPoint | None = None) -> PFSolution:
    """Funnel value and erasure-structured test channel for 0 <= C <= C*."""
    T = as_channel(T)
    touch = touch or find_touch_point(T, cfg)
    if C < 0:
        raise ValueError("C must be non-negative")
    if C > touch.C_star + 1e-12:
        raise OutOfRegimeError(
            f"C = {C} exceeds C* = {touch.C_star}; beyond C* use oracle.pf_oracle"
        )
    C = min(C, touch.C_star)
    n = T.input_dim
    logn = math.log2(n)
    perms = regular_transversal(T.symmetry)
    cols = [G.apply(touch.p_star) for G in perms]
    slope = (logn - entropy(T.entries @ touch.p_star)) / (logn - entropy(touch.p_star))
    return _erasure_solution(cols, touch.p_star, C, touch.C_star, C * slope, touch)


def pf_slope(T, touch: TouchPoint) -> float:
    T = as_channel(T)
    logn = math.log2(T.input_dim)
    return (logn - entropy(T.entries @ touch.p_star)) / (logn - entropy(touch.p_star))


def _to_level(p, target):
    """Move p along the ray from the uniform law until h(p) = target.

    h is concave with its maximum at u, so it decreases along the ray.
    """
    n = len(p)
    u = np.full(n, 1.0 / n)
    d = p - u
    neg = d < 0
    t_max = float(np.min(-u[neg] / d[neg])) if np.any(neg) else 0.0
    if t_max <= 0.0:
        return u
    base = u
    if entropy(u + t_max * d) > target:
        # the ray leaves the simplex above the level; head for the nearest vertex instead
        base = u + t_max * d
        e = np.zeros(n)
        e[int(np.argmax(base))] = 1.0
        d, t_max = e - base, 1.0
    lo, hi = 0.0, t_max
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if entropy(base + mid * d) > target:
            lo = mid
        else:
            hi = mid
    return np.clip(base + lo * d, 0.0, None)


def _level_objective(A, target, rho, mu):
    ln2 = math.log(2.0)

    def fg(p):
        Tp = A @ p
        lTp = np.log(np.maximum(Tp, 1e-300))
        lp = np.log(np.maximum(p, 1e-300))
        hT = -float(np.sum(np.where(Tp > 0, Tp * lTp, 0.0))) / ln2
        hp = -float(np.sum(np.where(p > 0, p * lp, 0.0))) / ln2
        g = hp - target
        f = -hT + mu * g + 0.5 * rho * g * g
        grad = (A.T @ (lTp + 1.0)) / ln2 - (mu + rho * g) * (lp + 1.0) / ln2
        return f, grad

    return fg


def pf_symmetric_value(T, C: float, cfg: SolverConfig = DEFAULT_CONFIG):
    """Funnel rate restricted to W uniform over the orbit of a single p.

    Every such test channel leaves X uniform and gives I(X;W) = log n - h(p),
    I(Y;W) = log n - h(Tp); the best one maximises h(Tp) on the level set
    h(p) = log n - C.  No erasure symbol is used.  Returns (R, p).
    """
    T = as_channel(T)
    _require_symmetric_square(T)
    n = T.input_dim
    logn = math.log2(n)
    if not 0.0 <= C <= logn + 1e-12:
        raise ValueError(f"C must lie in [0, log n] = [0, {logn}]")
    target = max(0.0, logn - C)
    A = T.entries
    P, hT, hp = grid_entropies(T, capped_resolution(n, cfg.grid_res))
    idx = np.nonzero(np.abs(hp - target) <= LEVEL_BAND)[0]
    starts = [P[i] for i in idx[np.argsort(-hT[idx], kind="stable")[:8]]]
    starts += [cfg.rng(STREAM_SYM, r).dirichlet(np.full(n, 0.5)) for r in range(max(1, cfg.restarts // 4))]

    def run(p0):
        p = _to_level(np.asarray(p0, dtype=float), target)
        mu = 0.0
        for rho in (1.0, 10.0, 100.0, 1000.0):
            p, _, _ = _pgd(_level_objective(A, target, rho, mu), p, project_simplex, cfg.max_iters, cfg.step_tolerance)
            mu += rho * (entropy(p) - target)
        p = _to_level(p, target)
        return entropy(A @ p), tuple(p)

    best_h, best_p = max(pmap(run, starts))
    return logn - best_h, prob_vector(np.array(best_p))


def _is_bms(T: ChannelMatrix, tol=1e-9):
    A = T.entries
    return A.shape[1] == 2 and A.shape[0] >= 2 and np.allclose(A[:, 1], A[::-1, 0], atol=tol, rtol=0)


def bec_pf(channel, C: float) -> PFSolution:
    """Funnel for a binary-input symmetric channel: an erasure test channel with eps = 1 - C."""
    T = as_channel(channel)
    if not _is_bms(T):
        raise ValueError("bec_pf needs a binary-input memoryless symmetric channel")
    if not 0.0 <= C <= 1.0:
        raise ValueError("C must lie in [0, 1] bits")
    z = T.entries[:, 0]
    h_out = entropy(T.entries @ np.array([0.5, 0.5]))
    # phi(u, lam) = phi(e, lam) at lam = h(Tu) - h(z)
    touch = TouchPoint(h_out - entropy(z), basis(2, 0), 1.0)
    cols = [basis(2, 0), basis(2, 1)]
    return _erasure_solution(cols, touch.p_star, C, 1.0, C * (h_out - entropy(z)), touch)


def pf_cardinality_bound(n: int) -> int:
    if n < 2:
        raise ValueError("n must be at least 2")
    return n + 1
