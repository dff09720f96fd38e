"""Pure numpy implementations of the hot kernels.

These define the reference behaviour; ``_ckernels.pyx`` mirrors them loop for
loop.  All quantities are in bits.
"""
import math

import numpy as np

LN2 = math.log(2.0)
TINY = 1e-300
ARMIJO = 1e-4
MAX_STEP = 1e6
MAX_BACKTRACK = 80


def project_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex (sort based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_columns(P):
    """Project every column of ``P`` onto the simplex."""
    out = np.empty_like(P, dtype=float)
    for j in range(P.shape[1]):
        out[:, j] = project_simplex(P[:, j])
    return out


def _check_shapes(T, q, cols):
    if q.shape[0] != T.shape[1] or cols != T.shape[1]:
        raise ValueError(
            f"shape mismatch: channel has {T.shape[1]} inputs, law has {q.shape[0]}, "
            f"test channel has {cols} columns"
        )


def _xlogx_sum(x):
    x = x[x > 0]
    return float(np.sum(x * np.log(x)))


def _safe_log(x):
    return np.log(np.maximum(x, TINY))


def phi_value_grad(T, p, lam):
    """phi(p) = h(Tp) - lam*h(p) and its gradient, in bits."""
    Tp = T @ p
    val = (-_xlogx_sum(Tp) + lam * _xlogx_sum(p)) / LN2
    grad = (-(T.T @ (_safe_log(Tp) + 1.0)) + lam * (_safe_log(p) + 1.0)) / LN2
    return val, grad


def channel_rates(T, q, P):
    """Return ``(I(X;W), I(Y;W), dI(X;W)/dP, dI(Y;W)/dP)`` in bits.

    ``P`` is the k x n test channel with P[w, x] = P(W=w | X=x).
    """
    T = np.asarray(T, dtype=float)
    q = np.asarray(q, dtype=float)
    P = np.asarray(P, dtype=float)
    _check_shapes(T, q, P.shape[1])
    r = P @ q
    K = T @ (P * q).T
    s = T @ q
    logP = _safe_log(P)
    logr = _safe_log(r)
    J = P * q
    ixw = float(np.sum(np.where(J > 0, J * (logP - logr[:, None]), 0.0)))
    mask = K > 0
    ratio = np.where(mask, K / np.where(mask, np.outer(s, r), 1.0), 1.0)
    iyw = float(np.sum(np.where(mask, K * np.log(ratio), 0.0)))
    g_xw = q[None, :] * (logP - logr[:, None])
    logK = _safe_log(K)
    # sum_y T[y,x] log K[y,w]  ->  (k x n)
    g_yw = q[None, :] * ((logK.T @ T) - logr[:, None])
    return ixw / LN2, iyw / LN2, g_xw / LN2, g_yw / LN2


def _penalty(ixw, C, mu, rho, mode):
    """Value and derivative (w.r.t. I(X;W)) of the constraint penalty."""
    if mode == 0:
        return 0.0, 0.0
    g = ixw - C
    if mode == 1:
        t = max(0.0, g + mu / rho)
        return 0.5 * rho * t * t - mu * mu / (2.0 * rho), rho * t
    return mu * g + 0.5 * rho * g * g, mu + rho * g


def _pgd(fg, x0, proj, max_iters, step_tol):
    x = proj(np.array(x0, dtype=float))
    f, g = fg(x)
    step = 1.0
    it = 0
    for it in range(1, max_iters + 1):
        step = min(step * 2.0, MAX_STEP)
        accepted = False
        for _ in range(MAX_BACKTRACK):
            x_new = proj(x - step * g)
            d = x_new - x
            f_new, g_new = fg(x_new)
            if f_new <= f - ARMIJO / step * float(np.sum(d * d)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        x, f, g = x_new, f_new, g_new
        if float(np.max(np.abs(d))) < step_tol:
            break
    return x, f, it


def phi_descent(T, p0, lam, sign, max_iters, step_tol):
    """Minimise ``sign * phi(., lam)`` over the simplex from ``p0``.

    Returns ``(p, phi(p), iterations)``; the returned value is phi itself,
    not the signed objective.
    """
    T = np.asarray(T, dtype=float)
    if np.shape(p0)[-1] != T.shape[1]:
        raise ValueError(f"shape mismatch: channel has {T.shape[1]} inputs, vector has {np.shape(p0)[-1]}")

    def fg(p):
        v, g = phi_value_grad(T, p, lam)
        return sign * v, sign * g

    p, f, it = _pgd(fg, p0, project_simplex, max_iters, step_tol)
    return p, sign * f, it


def channel_objective(T, q, P, a, b, C, mu, rho, mode):
    ixw, iyw, gx, gy = channel_rates(T, q, P)
    pen, dpen = _penalty(ixw, C, mu, rho, mode)
    return a * iyw + b * ixw + pen, a * gy + (b + dpen) * gx


def channel_descent(T, q, P0, a, b, C, mu, rho, mode, max_iters, step_tol):
    """Minimise ``a*I(Y;W) + b*I(X;W) + penalty(I(X;W))`` over test channels.

    ``mode`` selects the penalty: 0 none, 1 inequality augmented Lagrangian
    for I(X;W) <= C, 2 equality augmented Lagrangian for I(X;W) = C.
    """
    T = np.asarray(T, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_shapes(T, q, np.shape(P0)[1])

    def fg(P):
        return channel_objective(T, q, P, a, b, C, mu, rho, mode)

    P, f, it = _pgd(fg, P0, project_columns, max_iters, step_tol)
    return P, f, it
