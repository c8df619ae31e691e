"""Pure-Python fallback for the compiled kernels.

The correlation routines repeat the compiled kernel's arithmetic operation
for operation (CPython floats are C doubles), so both backends return
bit-identical results; they are just much slower at scale. The LOESS pass
uses numpy per point and agrees with the compiled pass to rounding error.
"""

import math

import numpy as np

STATUS_OK = 0
STATUS_INSUFFICIENT_OVERLAP = 1
STATUS_UNDEFINED = 2
STATUS_NO_VALID_LAG = 3

_INF = float("inf")


def corr_at_lag_kernel(x, y, k, min_overlap):
    """Return (status, r, n_complete) for pairs (x[s+k], y[s])."""
    xl = x.tolist()
    yl = y.tolist()
    return _corr(xl, yl, int(k), int(min_overlap))


def _corr(xl, yl, k, min_overlap):
    nx = len(xl)
    ny = len(yl)
    s_lo = max(0, -k)
    s_hi = min(ny - 1, nx - 1 - k)

    n = 0
    sx = 0.0
    sy = 0.0
    xmin = _INF
    xmax = -_INF
    ymin = _INF
    ymax = -_INF
    for s in range(s_lo, s_hi + 1):
        xv = xl[s + k]
        yv = yl[s]
        if xv == xv and yv == yv:
            n += 1
            sx += xv
            sy += yv
            if xv < xmin: xmin = xv
            if xv > xmax: xmax = xv
            if yv < ymin: ymin = yv
            if yv > ymax: ymax = yv

    if n < min_overlap:
        return STATUS_INSUFFICIENT_OVERLAP, 0.0, n
    if xmin == xmax or ymin == ymax:
        return STATUS_UNDEFINED, 0.0, n

    mx = sx / n
    my = sy / n
    sxx = 0.0
    syy = 0.0
    sxy = 0.0
    for s in range(s_lo, s_hi + 1):
        xv = xl[s + k]
        yv = yl[s]
        if xv == xv and yv == yv:
            dx = xv - mx
            dy = yv - my
            sxx += dx * dx
            syy += dy * dy
            sxy += dx * dy

    denom = math.sqrt(sxx * syy)
    if denom == 0.0:
        return STATUS_UNDEFINED, 0.0, n
    r = sxy / denom
    if r > 1.0:
        r = 1.0
    if r < -1.0:
        r = -1.0
    return STATUS_OK, r, n


def lag_sweep_kernel(x, y, max_lag, min_overlap):
    """Exhaustive search over k in [-max_lag, max_lag]; ties toward the
    smallest |lag|, then the negative one."""
    xl = x.tolist()
    yl = y.tolist()
    min_overlap = int(min_overlap)
    found = False
    best_r = 0.0
    best_k = 0
    best_n = 0
    for k in range(-int(max_lag), int(max_lag) + 1):
        status, r, n = _corr(xl, yl, k, min_overlap)
        if status != STATUS_OK:
            continue
        better = False
        if not found:
            better = True
        elif r > best_r:
            better = True
        elif r == best_r:
            ak = abs(k)
            abk = abs(best_k)
            if ak < abk or (ak == abk and k < best_k):
                better = True
        if better:
            found = True
            best_r = r
            best_k = k
            best_n = n
    if not found:
        return STATUS_NO_VALID_LAG, 0.0, 0, 0
    return STATUS_OK, best_r, best_k, best_n


def _solve_normal(a, b):
    """Partial-pivot Gaussian elimination mirroring the compiled kernel.

    `a` is a list of row lists, `b` a list; returns the solution list or
    None when a pivot falls below 1e-12 times the largest initial entry.
    """
    m = len(b)
    amax = max(abs(v) for row in a for v in row)
    thresh = 1e-12 * amax
    for col in range(m):
        row = max(range(col, m), key=lambda i: abs(a[i][col]))
        if abs(a[row][col]) <= thresh:
            return None
        if row != col:
            a[col], a[row] = a[row], a[col]
            b[col], b[row] = b[row], b[col]
        for i in range(col + 1, m):
            factor = a[i][col] / a[col][col]
            for j in range(col, m):
                a[i][j] -= factor * a[col][j]
            b[i] -= factor * b[col]
    beta = [0.0] * m
    for col in range(m - 1, -1, -1):
        v = b[col]
        for j in range(col + 1, m):
            v -= a[col][j] * beta[j]
        beta[col] = v / a[col][col]
    return beta


def loess_pass(xs, ys, q, degree, delta):
    """One locally weighted regression pass over sorted, unmasked data."""
    n = xs.shape[0]
    q = int(q)
    fitted = np.empty(n, dtype=np.float64)
    for i in range(n):
        lo = hi = i
        xi = xs[i]
        while hi - lo + 1 < q:
            if lo == 0:
                hi += 1
            elif hi == n - 1:
                lo -= 1
            elif xi - xs[lo - 1] <= xs[hi + 1] - xi:
                lo -= 1
            else:
                hi += 1
        h = max(xi - xs[lo], xs[hi] - xi)
        inv_h = 1.0 / h if h > 0.0 else 0.0

        t = (xs[lo:hi + 1] - xi) * inv_h
        u = np.abs(t)
        w = np.where(u < 1.0, (1.0 - u ** 3) ** 3, 0.0) * delta[lo:hi + 1]
        s0 = float(np.sum(w))
        if s0 <= 0.0:
            fitted[i] = ys[i]
            continue
        wt = w * t
        wt2 = wt * t
        yw = ys[lo:hi + 1]
        s1 = float(np.sum(wt))
        s2 = float(np.sum(wt2))
        s3 = float(np.sum(wt2 * t))
        s4 = float(np.sum(wt2 * t * t))
        b0 = float(np.sum(w * yw))
        b1 = float(np.sum(wt * yw))
        b2 = float(np.sum(wt2 * yw))

        beta = None
        m = degree + 1
        while m > 1:
            if m == 3:
                a = [[s0, s1, s2], [s1, s2, s3], [s2, s3, s4]]
                rhs = [b0, b1, b2]
            else:
                a = [[s0, s1], [s1, s2]]
                rhs = [b0, b1]
            beta = _solve_normal(a, rhs)
            if beta is not None:
                break
            m -= 1
        fitted[i] = beta[0] if beta is not None else b0 / s0
    return fitted
