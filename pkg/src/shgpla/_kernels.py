"""Compiled inner loops for Sturm-count root isolation and refinement.

Isolation runs once, serially; refinement treats every eigenvalue index on
its own, so any partition of the index range over threads gives
bit-identical results.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def sturm_count(d, b2, x, pivmin):
    """Number of eigenvalues of the tridiagonal (d, sqrt(b2)) strictly below x.

    Runs the ratio form q_f = P_{f+1}/P_f of the characteristic-minor
    recurrence; a sign agreement between consecutive minors is q_f > 0.
    """
    n = d.shape[0]
    count = 0
    q = x - d[0]
    if abs(q) < pivmin:
        q = -pivmin
    if q > 0.0:
        count += 1
    for i in range(1, n):
        q = (x - d[i]) - b2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q > 0.0:
            count += 1
    return count


@njit(cache=True, nogil=True)
def _count_and_logderiv(d, b2, x, pivmin):
    # Sturm count plus d/dx log P_n(x) = sum_f q'_f / q_f
    n = d.shape[0]
    count = 0
    q = x - d[0]
    if abs(q) < pivmin:
        q = -pivmin
    dq = 1.0
    r = 1.0 / q
    acc = dq * r
    if q > 0.0:
        count += 1
    for i in range(1, n):
        br = b2[i - 1] * r
        q = (x - d[i]) - br
        dq = 1.0 + br * r * dq
        if abs(q) < pivmin:
            q = -pivmin
        r = 1.0 / q
        acc += dq * r
        if q > 0.0:
            count += 1
    return count, acc


@njit(cache=True, nogil=True)
def isolate(d, b2, glo, ghi, ctol, pivmin, blo, bhi):
    """Bisection tree on the Sturm count: one bracket per eigenvalue.

    Afterwards [blo[v], bhi[v]] satisfies count(blo) <= v < count(bhi) and
    holds no other eigenvalue, unless it shrank below ``ctol`` first (a
    cluster, whose members then share the bracket).  Returns the number of
    count evaluations.
    """
    n = d.shape[0]
    cap = 4 * n + 64
    s_lo = np.empty(cap)
    s_hi = np.empty(cap)
    s_clo = np.empty(cap, dtype=np.int64)
    s_chi = np.empty(cap, dtype=np.int64)
    s_lo[0] = glo
    s_hi[0] = ghi
    s_clo[0] = 0
    s_chi[0] = n
    top = 1
    evals = 0
    while top > 0:
        top -= 1
        lo = s_lo[top]
        hi = s_hi[top]
        clo = s_clo[top]
        chi = s_chi[top]
        mid = 0.5 * (lo + hi)
        if chi - clo == 1 or hi - lo <= ctol or mid <= lo or mid >= hi:
            for v in range(clo, chi):
                blo[v] = lo
                bhi[v] = hi
            continue
        c = sturm_count(d, b2, mid, pivmin)
        evals += 1
        if c > clo:
            s_lo[top] = lo
            s_hi[top] = mid
            s_clo[top] = clo
            s_chi[top] = c
            top += 1
        if chi > c:
            s_lo[top] = mid
            s_hi[top] = hi
            s_clo[top] = c
            s_chi[top] = chi
            top += 1
    return evals


@njit(cache=True, nogil=True)
def refine_range(d, b2, blo, bhi, start, stop, rtol, atol, ctol, maxit, pivmin, out, ok):
    """Newton on P_{s+1} inside each isolating bracket, v = start..stop-1.

    Every iterate is also Sturm-counted and tightens the bracket; steps
    leaving the bracket are replaced by bisection.  ``ctol`` floors the
    tolerance: below about eps*|T| the count itself is rounding noise.
    """
    for v in range(start, stop):
        lo = blo[v]
        hi = bhi[v]
        x = 0.5 * (lo + hi)
        converged = False
        for _ in range(maxit):
            c, ld = _count_and_logderiv(d, b2, x, pivmin)
            if c >= v + 1:
                hi = x
            else:
                lo = x
            tol = max(rtol * max(abs(lo), abs(hi)), atol, ctol)
            step = 1.0 / ld
            if np.isfinite(step) and abs(step) <= 0.5 * tol:
                xn = x - step
                if lo <= xn <= hi:
                    x = xn
                converged = True
                break
            xn = x - step
            if not (lo < xn < hi) or not np.isfinite(xn):
                xn = 0.5 * (lo + hi)
            if hi - lo <= tol or xn <= lo or xn >= hi:
                x = xn
                converged = True
                break
            x = xn
        out[v] = x
        ok[v] = converged


def pivot_floor(b2):
    big = 1.0 if b2.shape[0] == 0 else max(1.0, float(np.max(b2)))
    return np.finfo(np.float64).tiny * big
