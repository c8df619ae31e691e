# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels: lagged Pearson correlation and LOESS fitting.

The correlation kernel's arithmetic (two-pass Pearson with ascending-index
accumulation, r = sxy / sqrt(sxx * syy), clamped to [-1, 1]) is a contract:
the pure-Python fallback and the exhaustive test oracle perform the same
IEEE-754 operations in the same order, so all three agree bit for bit.
Masked samples are NaN; a pair contributes only when both sides are finite.
"""

import numpy as np

from libc.math cimport INFINITY, sqrt

STATUS_OK = 0
STATUS_INSUFFICIENT_OVERLAP = 1
STATUS_UNDEFINED = 2
STATUS_NO_VALID_LAG = 3


cdef int _corr_at_lag(const double[::1] x, const double[::1] y,
                      Py_ssize_t k, Py_ssize_t min_overlap,
                      double* out_r, Py_ssize_t* out_n) noexcept nogil:
    """Pearson correlation of pairs (x[s+k], y[s]) over pairwise-complete s."""
    cdef Py_ssize_t nx = x.shape[0]
    cdef Py_ssize_t ny = y.shape[0]
    cdef Py_ssize_t s_lo = -k if -k > 0 else 0
    cdef Py_ssize_t s_hi = ny - 1 if ny - 1 < nx - 1 - k else nx - 1 - k
    cdef Py_ssize_t s, n = 0
    cdef double sx = 0.0, sy = 0.0
    cdef double xmin = INFINITY, xmax = -INFINITY
    cdef double ymin = INFINITY, ymax = -INFINITY
    cdef double xv, yv

    for s in range(s_lo, s_hi + 1):
        xv = x[s + k]
        yv = y[s]
        if xv == xv and yv == yv:
            n += 1
            sx += xv
            sy += yv
            if xv < xmin: xmin = xv
            if xv > xmax: xmax = xv
            if yv < ymin: ymin = yv
            if yv > ymax: ymax = yv

    out_n[0] = n
    if n < min_overlap:
        return 1
    # Constant side <=> zero variance. Exact extrema test; a sum-of-squares
    # test would see ~1e-30 cancellation junk instead of zero.
    if xmin == xmax or ymin == ymax:
        return 2

    cdef double mx = sx / n
    cdef double my = sy / n
    cdef double sxx = 0.0, syy = 0.0, sxy = 0.0
    cdef double dx, dy
    for s in range(s_lo, s_hi + 1):
        xv = x[s + k]
        yv = y[s]
        if xv == xv and yv == yv:
            dx = xv - mx
            dy = yv - my
            sxx += dx * dx
            syy += dy * dy
            sxy += dx * dy

    cdef double denom = sqrt(sxx * syy)
    if denom == 0.0:
        return 2
    cdef double r = sxy / denom
    if r > 1.0: r = 1.0
    if r < -1.0: r = -1.0
    out_r[0] = r
    return 0


def corr_at_lag_kernel(const double[::1] x, const double[::1] y,
                       Py_ssize_t k, Py_ssize_t min_overlap):
    """Return (status, r, n_complete) for a single lag k."""
    cdef double r = 0.0
    cdef Py_ssize_t n = 0
    cdef int status
    with nogil:
        status = _corr_at_lag(x, y, k, min_overlap, &r, &n)
    return status, r, n


def lag_sweep_kernel(const double[::1] x, const double[::1] y,
                     Py_ssize_t max_lag, Py_ssize_t min_overlap):
    """Exhaustive search over k in [-max_lag, max_lag].

    Returns (status, r, lag, n_complete_at_lag). Ties on r are broken toward
    the smallest |lag|, then the negative one.
    """
    cdef double r = 0.0, best_r = 0.0
    cdef Py_ssize_t n = 0, best_n = 0
    cdef Py_ssize_t k, best_k = 0
    cdef Py_ssize_t ak, abk
    cdef int status, found = 0, better
    with nogil:
        for k in range(-max_lag, max_lag + 1):
            status = _corr_at_lag(x, y, k, min_overlap, &r, &n)
            if status != 0:
                continue
            better = 0
            if not found:
                better = 1
            elif r > best_r:
                better = 1
            elif r == best_r:
                ak = -k if k < 0 else k
                abk = -best_k if best_k < 0 else best_k
                if ak < abk or (ak == abk and k < best_k):
                    better = 1
            if better:
                found = 1
                best_r = r
                best_k = k
                best_n = n
    if not found:
        return STATUS_NO_VALID_LAG, 0.0, 0, 0
    return 0, best_r, best_k, best_n


cdef int _solve_normal(double* a, double* b, int m, double* beta) noexcept nogil:
    """Gaussian elimination with partial pivoting on an m x m system.

    Returns 0 on success, 1 when a pivot falls below 1e-12 times the largest
    initial entry (treated as singular so the caller can drop a degree).
    """
    cdef double amax = 0.0, v, factor, piv
    cdef int i, j, col, row
    for i in range(m * m):
        v = a[i] if a[i] >= 0.0 else -a[i]
        if v > amax:
            amax = v
    cdef double thresh = 1e-12 * amax
    for col in range(m):
        row = col
        piv = a[col * m + col] if a[col * m + col] >= 0.0 else -a[col * m + col]
        for i in range(col + 1, m):
            v = a[i * m + col] if a[i * m + col] >= 0.0 else -a[i * m + col]
            if v > piv:
                piv = v
                row = i
        if piv <= thresh:
            return 1
        if row != col:
            for j in range(m):
                v = a[col * m + j]
                a[col * m + j] = a[row * m + j]
                a[row * m + j] = v
            v = b[col]
            b[col] = b[row]
            b[row] = v
        for i in range(col + 1, m):
            factor = a[i * m + col] / a[col * m + col]
            for j in range(col, m):
                a[i * m + j] -= factor * a[col * m + j]
            b[i] -= factor * b[col]
    for col in range(m - 1, -1, -1):
        v = b[col]
        for j in range(col + 1, m):
            v -= a[col * m + j] * beta[j]
        beta[col] = v / a[col * m + col]
    return 0


cdef double _fit_one(const double[::1] xs, const double[::1] ys,
                     const double[::1] delta, Py_ssize_t n,
                     Py_ssize_t i, Py_ssize_t q, int degree) noexcept nogil:
    """Weighted local polynomial fit at xs[i] over the q nearest neighbors."""
    cdef Py_ssize_t lo = i, hi = i, j
    cdef double xi = xs[i]
    # Grow toward the nearer neighbor; ties take the left one.
    while hi - lo + 1 < q:
        if lo == 0:
            hi += 1
        elif hi == n - 1:
            lo -= 1
        elif xi - xs[lo - 1] <= xs[hi + 1] - xi:
            lo -= 1
        else:
            hi += 1
    cdef double h = xi - xs[lo]
    if xs[hi] - xi > h:
        h = xs[hi] - xi
    cdef double inv_h = 0.0
    if h > 0.0:
        inv_h = 1.0 / h

    # Moments of the tricube-and-robustness weighted basis {1, t, t^2},
    # t = (x - xi) / h, accumulated left to right.
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0
    cdef double b0 = 0.0, b1 = 0.0, b2 = 0.0
    cdef double t, u, w, wt, wt2, yv
    for j in range(lo, hi + 1):
        t = (xs[j] - xi) * inv_h
        u = t if t >= 0.0 else -t
        if u >= 1.0:
            continue
        w = (1.0 - u * u * u)
        w = w * w * w * delta[j]
        if w <= 0.0:
            continue
        yv = ys[j]
        wt = w * t
        wt2 = wt * t
        s0 += w
        s1 += wt
        s2 += wt2
        s3 += wt2 * t
        s4 += wt2 * t * t
        b0 += w * yv
        b1 += wt * yv
        b2 += wt2 * yv

    if s0 <= 0.0:
        return ys[i]

    cdef double a[9]
    cdef double rhs[3]
    cdef double beta[3]
    cdef int m = degree + 1
    while m > 1:
        if m == 3:
            a[0] = s0; a[1] = s1; a[2] = s2
            a[3] = s1; a[4] = s2; a[5] = s3
            a[6] = s2; a[7] = s3; a[8] = s4
            rhs[0] = b0; rhs[1] = b1; rhs[2] = b2
        else:
            a[0] = s0; a[1] = s1
            a[2] = s1; a[3] = s2
            rhs[0] = b0; rhs[1] = b1
        if _solve_normal(a, rhs, m, beta) == 0:
            return beta[0]
        m -= 1
    return b0 / s0


def loess_pass(const double[::1] xs, const double[::1] ys,
               Py_ssize_t q, int degree, const double[::1] delta):
    """One locally weighted regression pass over sorted, unmasked data.

    Robustness iterations live in the caller: `delta` carries the current
    per-point bisquare weights (all ones on the first pass).
    """
    cdef Py_ssize_t n = xs.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] fitted = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            fitted[i] = _fit_one(xs, ys, delta, n, i, q, degree)
    return out
