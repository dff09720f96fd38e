# Compiled projected-gradient kernels; see _pykernels.py for the reference version.
import numpy as np

from libc.math cimport log, fabs

cdef double LN2 = 0.6931471805599453
cdef double TINY = 1e-300
cdef double ARMIJO = 1e-4
cdef double MAX_STEP = 1e6
cdef int MAX_BACKTRACK = 80


cdef _check_shapes(const double[:, ::1] T, const double[::1] q, Py_ssize_t cols):
    if q.shape[0] != T.shape[1] or cols != T.shape[1]:
        raise ValueError(
            f"shape mismatch: channel has {T.shape[1]} inputs, law has {q.shape[0]}, "
            f"test channel has {cols} columns"
        )


cdef inline double xlogx(double x) noexcept nogil:
    if x <= 0.0:
        return 0.0
    return x * log(x)


cdef inline double slog(double x) noexcept nogil:
    if x < TINY:
        x = TINY
    return log(x)


cdef void proj_simplex(double* v, Py_ssize_t n, Py_ssize_t stride, double* work) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double tmp, css, theta, best
    for i in range(n):
        work[i] = v[i * stride]
    # insertion sort, descending; n is tiny
    for i in range(1, n):
        tmp = work[i]
        j = i - 1
        while j >= 0 and work[j] < tmp:
            work[j + 1] = work[j]
            j -= 1
        work[j + 1] = tmp
    css = 0.0
    theta = 0.0
    for i in range(n):
        css += work[i]
        tmp = (css - 1.0) / (i + 1.0)
        if work[i] - tmp > 0:
            theta = tmp
    for i in range(n):
        best = v[i * stride] - theta
        v[i * stride] = best if best > 0.0 else 0.0


def project_simplex(v):
    cdef double[::1] out = np.array(v, dtype=float, copy=True).ravel()
    cdef double[::1] work = np.empty(out.shape[0])
    proj_simplex(&out[0], out.shape[0], 1, &work[0])
    return np.asarray(out)


# ---------------------------------------------------------------- phi kernel

cdef double phi_eval(const double[:, ::1] T, double* p, double lam, double sign,
                     double* Tp, double* grad) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1], i, y
    cdef double hT = 0.0, hp = 0.0, acc
    for y in range(m):
        acc = 0.0
        for i in range(n):
            acc += T[y, i] * p[i]
        Tp[y] = acc
        hT -= xlogx(acc)
    for i in range(n):
        hp -= xlogx(p[i])
    for i in range(n):
        acc = 0.0
        for y in range(m):
            acc += T[y, i] * (slog(Tp[y]) + 1.0)
        grad[i] = sign * (-acc + lam * (slog(p[i]) + 1.0)) / LN2
    return sign * (hT - lam * hp) / LN2


def phi_value_grad(T, p, double lam):
    cdef const double[:, ::1] Tm = np.ascontiguousarray(T, dtype=float)
    cdef double[::1] pm = np.array(p, dtype=float, copy=True).ravel()
    if pm.shape[0] != Tm.shape[1]:
        raise ValueError(f"shape mismatch: channel has {Tm.shape[1]} inputs, vector has {pm.shape[0]}")
    cdef double[::1] Tp = np.empty(Tm.shape[0])
    cdef double[::1] g = np.empty(Tm.shape[1])
    cdef double val = phi_eval(Tm, &pm[0], lam, 1.0, &Tp[0], &g[0])
    return val, np.asarray(g)


def phi_descent(T, p0, double lam, double sign, int max_iters, double step_tol):
    cdef const double[:, ::1] Tm = np.ascontiguousarray(T, dtype=float)
    cdef Py_ssize_t n = Tm.shape[1], m = Tm.shape[0], i
    cdef double[::1] x = np.array(p0, dtype=float, copy=True).ravel()
    if x.shape[0] != n:
        raise ValueError(f"shape mismatch: channel has {n} inputs, vector has {x.shape[0]}")
    cdef double[::1] xn = np.empty(n)
    cdef double[::1] g = np.empty(n)
    cdef double[::1] gn = np.empty(n)
    cdef double[::1] Tp = np.empty(m)
    cdef double[::1] work = np.empty(n)
    cdef double f, fn, step = 1.0, dd, diff, d
    cdef int it = 0, bt
    cdef bint accepted
    with nogil:
        proj_simplex(&x[0], n, 1, &work[0])
        f = phi_eval(Tm, &x[0], lam, sign, &Tp[0], &g[0])
        while it < max_iters:
            it += 1
            step = step * 2.0
            if step > MAX_STEP:
                step = MAX_STEP
            accepted = False
            for bt in range(MAX_BACKTRACK):
                for i in range(n):
                    xn[i] = x[i] - step * g[i]
                proj_simplex(&xn[0], n, 1, &work[0])
                dd = 0.0
                for i in range(n):
                    d = xn[i] - x[i]
                    dd += d * d
                fn = phi_eval(Tm, &xn[0], lam, sign, &Tp[0], &gn[0])
                if fn <= f - ARMIJO / step * dd:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            diff = 0.0
            for i in range(n):
                d = fabs(xn[i] - x[i])
                if d > diff:
                    diff = d
                x[i] = xn[i]
                g[i] = gn[i]
            f = fn
            if diff < step_tol:
                break
    return np.asarray(x), sign * f, it


# ------------------------------------------------------------ channel kernel

cdef struct Rates:
    double ixw
    double iyw


cdef Rates rates_eval(const double[:, ::1] T, const double[::1] q, double* P, Py_ssize_t k,
                      double* r, double* K, double* s,
                      double* gx, double* gy) noexcept nogil:
    # P is k x n row-major; K is m x k row-major; gx, gy are k x n
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1], w, x, y
    cdef double acc, lr, pj
    cdef Rates out
    out.ixw = 0.0
    out.iyw = 0.0
    for w in range(k):
        acc = 0.0
        for x in range(n):
            acc += P[w * n + x] * q[x]
        r[w] = acc
    for y in range(m):
        acc = 0.0
        for x in range(n):
            acc += T[y, x] * q[x]
        s[y] = acc
        for w in range(k):
            acc = 0.0
            for x in range(n):
                acc += T[y, x] * q[x] * P[w * n + x]
            K[y * k + w] = acc
    for w in range(k):
        lr = slog(r[w])
        for x in range(n):
            pj = P[w * n + x] * q[x]
            if pj > 0.0:
                out.ixw += pj * (log(P[w * n + x]) - lr)
            gx[w * n + x] = q[x] * (slog(P[w * n + x]) - lr) / LN2
            acc = 0.0
            for y in range(m):
                acc += T[y, x] * slog(K[y * k + w])
            gy[w * n + x] = q[x] * (acc - lr) / LN2
    for y in range(m):
        for w in range(k):
            acc = K[y * k + w]
            if acc > 0.0:
                out.iyw += acc * log(acc / (s[y] * r[w]))
    out.ixw /= LN2
    out.iyw /= LN2
    return out


def channel_rates(T, q, P):
    cdef const double[:, ::1] Tm = np.ascontiguousarray(T, dtype=float)
    cdef const double[::1] qm = np.ascontiguousarray(q, dtype=float)
    cdef double[:, ::1] Pm = np.array(P, dtype=float, copy=True, order="C")
    _check_shapes(Tm, qm, Pm.shape[1])
    cdef Py_ssize_t k = Pm.shape[0], n = Pm.shape[1], m = Tm.shape[0]
    cdef double[::1] r = np.empty(k)
    cdef double[::1] K = np.empty(m * k)
    cdef double[::1] s = np.empty(m)
    cdef double[:, ::1] gx = np.empty((k, n))
    cdef double[:, ::1] gy = np.empty((k, n))
    cdef Rates out = rates_eval(Tm, qm, &Pm[0, 0], k, &r[0], &K[0], &s[0], &gx[0, 0], &gy[0, 0])
    return out.ixw, out.iyw, np.asarray(gx), np.asarray(gy)


cdef double objective(const double[:, ::1] T, const double[::1] q, double* P, Py_ssize_t k,
                      double a, double b, double C, double mu, double rho, int mode,
                      double* r, double* K, double* s, double* gx, double* gy,
                      double* grad) noexcept nogil:
    cdef Py_ssize_t n = T.shape[1], i
    cdef Rates rt = rates_eval(T, q, P, k, r, K, s, gx, gy)
    cdef double pen = 0.0, dpen = 0.0, g, t
    if mode == 1:
        g = rt.ixw - C
        t = g + mu / rho
        if t < 0.0:
            t = 0.0
        pen = 0.5 * rho * t * t - mu * mu / (2.0 * rho)
        dpen = rho * t
    elif mode == 2:
        g = rt.ixw - C
        pen = mu * g + 0.5 * rho * g * g
        dpen = mu + rho * g
    for i in range(k * n):
        grad[i] = a * gy[i] + (b + dpen) * gx[i]
    return a * rt.iyw + b * rt.ixw + pen


cdef void proj_columns(double* P, Py_ssize_t k, Py_ssize_t n, double* work) noexcept nogil:
    cdef Py_ssize_t x
    for x in range(n):
        proj_simplex(P + x, k, n, work)


def project_columns(P):
    cdef double[:, ::1] X = np.array(P, dtype=float, copy=True, order="C")
    cdef double[::1] work = np.empty(X.shape[0])
    proj_columns(&X[0, 0], X.shape[0], X.shape[1], &work[0])
    return np.asarray(X)


def channel_objective(T, q, P, double a, double b, double C, double mu, double rho, int mode):
    cdef const double[:, ::1] Tm = np.ascontiguousarray(T, dtype=float)
    cdef const double[::1] qm = np.ascontiguousarray(q, dtype=float)
    cdef double[:, ::1] Pm = np.array(P, dtype=float, copy=True, order="C")
    _check_shapes(Tm, qm, Pm.shape[1])
    cdef Py_ssize_t k = Pm.shape[0], n = Pm.shape[1], m = Tm.shape[0]
    cdef double[::1] r = np.empty(k)
    cdef double[::1] K = np.empty(m * k)
    cdef double[::1] s = np.empty(m)
    cdef double[::1] gx = np.empty(k * n)
    cdef double[::1] gy = np.empty(k * n)
    cdef double[:, ::1] grad = np.empty((k, n))
    cdef double f = objective(Tm, qm, &Pm[0, 0], k, a, b, C, mu, rho, mode,
                              &r[0], &K[0], &s[0], &gx[0], &gy[0], &grad[0, 0])
    return f, np.asarray(grad)


def channel_descent(T, q, P0, double a, double b, double C, double mu, double rho,
                    int mode, int max_iters, double step_tol):
    cdef const double[:, ::1] Tm = np.ascontiguousarray(T, dtype=float)
    cdef const double[::1] qm = np.ascontiguousarray(q, dtype=float)
    cdef double[:, ::1] X = np.array(P0, dtype=float, copy=True, order="C")
    _check_shapes(Tm, qm, X.shape[1])
    cdef Py_ssize_t k = X.shape[0], n = X.shape[1], m = Tm.shape[0], i, N = k * n
    cdef double[:, ::1] Xn = np.empty((k, n))
    cdef double[::1] g = np.empty(N)
    cdef double[::1] gn = np.empty(N)
    cdef double[::1] r = np.empty(k)
    cdef double[::1] K = np.empty(m * k)
    cdef double[::1] s = np.empty(m)
    cdef double[::1] gx = np.empty(N)
    cdef double[::1] gy = np.empty(N)
    cdef double[::1] work = np.empty(k)
    cdef double* x = &X[0, 0]
    cdef double* xn = &Xn[0, 0]
    cdef double f, fn, step = 1.0, dd, diff, d
    cdef int it = 0, bt
    cdef bint accepted
    with nogil:
        proj_columns(x, k, n, &work[0])
        f = objective(Tm, qm, x, k, a, b, C, mu, rho, mode,
                      &r[0], &K[0], &s[0], &gx[0], &gy[0], &g[0])
        while it < max_iters:
            it += 1
            step = step * 2.0
            if step > MAX_STEP:
                step = MAX_STEP
            accepted = False
            for bt in range(MAX_BACKTRACK):
                for i in range(N):
                    xn[i] = x[i] - step * g[i]
                proj_columns(xn, k, n, &work[0])
                dd = 0.0
                for i in range(N):
                    d = xn[i] - x[i]
                    dd += d * d
                fn = objective(Tm, qm, xn, k, a, b, C, mu, rho, mode,
                               &r[0], &K[0], &s[0], &gx[0], &gy[0], &gn[0])
                if fn <= f - ARMIJO / step * dd:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            diff = 0.0
            for i in range(N):
                d = fabs(xn[i] - x[i])
                if d > diff:
                    diff = d
                x[i] = xn[i]
                g[i] = gn[i]
            f = fn
            if diff < step_tol:
                break
    return np.asarray(X), f, it
