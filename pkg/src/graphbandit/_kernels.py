"""Compiled scalar kernels for the OMD water-filling solve.

Each free coordinate of a block solves ``a (1 + ln p) - b / p = y + lam``
(clamped below at its lower bound) and ``lam`` is chosen so the block sums to
its mass. Vectors here are short, so plain loops under numba beat numpy.
"""

import math

import numpy as np
from numba import njit

OK = 0
INNER_FAIL = 1
OUTER_FAIL = 2

_XMAX = 690.0


@njit(cache=True)
def grad1(a, b, p):
    return a * (1.0 + math.log(p)) - b / p


@njit(cache=True)
def _mixed_inverse(a, b, v, tol, max_iter):
    # f(x) = a (1 + x) - b e^{-x} - v is increasing and concave in x = ln p.
    # Newton from a point with f <= 0 climbs monotonically to the root but
    # moves only ~1 per step where the barrier dominates, so each step is
    # paired with a bisection of the bracket.
    lo = v / a - 1.0
    hi = max(0.0, (v + b) / a - 1.0)
    if v < 0.0:
        xb = math.log(-b / v)
        if xb <= -1.0:
            lo = max(lo, xb)
        else:
            hi = min(hi, xb)
    lo = min(max(lo, -_XMAX), _XMAX)
    hi = min(max(hi, lo), _XMAX)
    for _ in range(max_iter):
        emx = math.exp(-lo)
        step = -(a * (1.0 + lo) - b * emx - v) / (a + b * emx)
        if step > 0.0:
            lo = min(lo + step, hi)
        scale = max(1.0, abs(lo))
        if step <= tol * scale:
            return math.exp(lo), True
        mid = 0.5 * (lo + hi)
        if a * (1.0 + mid) - b * math.exp(-mid) - v <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * scale:
            return math.exp(lo), True
    return math.exp(lo), False


@njit(cache=True)
def inverse_grad1(a, b, v, tol=1e-12, max_iter=200):
    """Solve ``a (1 + ln p) - b / p = v`` for ``p > 0``; ``(p, converged)``."""
    if b == 0.0:
        return math.exp(min(v / a - 1.0, _XMAX)), True
    if a == 0.0:
        if v < 0.0:
            return -b / v, True
        return math.inf, True
    return _mixed_inverse(a, b, v, tol, max_iter)


@njit(cache=True)
def _inv_grad_prime1(a, b, p):
    if p <= 0.0:
        return 0.0
    return p * p / (a * p + b)


@njit(cache=True)
def fill(a, b, lb, y, mass, floor, out, max_iter=200):
    """Water-fill ``mass`` over one block into ``out``.

    Returns ``(lam, status)``; ``lam`` is nan when every coordinate is at its
    lower bound.
    """
    n = y.size
    lbsum = 0.0
    for i in range(n):
        lbsum += lb[i]
    slack = mass - lbsum
    if slack <= 1e-15 * max(1.0, mass):
        scale = mass / lbsum if lbsum > 0.0 else 0.0
        for i in range(n):
            out[i] = lb[i] * scale
        return math.nan, OK
    lam_hi = math.inf
    lam_lo = math.inf
    r = slack / n
    for i in range(n):
        lam_hi = min(lam_hi, grad1(a[i], b[i], mass) - y[i])
        lam_lo = min(lam_lo, grad1(a[i], b[i], r) - y[i])
    lam = lam_hi
    # phi(lam) = sum max(lb, ginv(y + lam)) - mass is convex and increasing
    # with phi(lam_hi) >= 0, so Newton steps move left monotonically.
    converged = False
    for _ in range(max_iter):
        phi = -mass
        slope = 0.0
        nfree = 0
        for i in range(n):
            q, ok = inverse_grad1(a[i], b[i], y[i] + lam)
            if not ok:
                return lam, INNER_FAIL
            if q > lb[i]:
                phi += q
                slope += _inv_grad_prime1(a[i], b[i], q)
                nfree += 1
            else:
                phi += lb[i]
        if abs(phi) <= 1e-15 * mass * max(1.0, n) or nfree == 0 or slope <= 0.0:
            converged = True
            break
        nxt = lam - phi / slope
        if not nxt < lam:
            # no further progress representable in floating point
            converged = True
            break
        lam = max(nxt, lam_lo)
    if not converged:
        return lam, OUTER_FAIL
    fl = min(floor, mass)
    clamped = 0.0
    freesum = 0.0
    for i in range(n):
        q, ok = inverse_grad1(a[i], b[i], y[i] + lam)
        if not ok:
            return lam, INNER_FAIL
        v = max(lb[i], q)
        v = max(v, fl)
        out[i] = v
        if v > lb[i]:
            freesum += v
        else:
            clamped += v
    if freesum > 0.0:
        scale = (mass - clamped) / freesum
        for i in range(n):
            if out[i] > lb[i]:
                out[i] *= scale
    return lam, OK


@njit(cache=True)
def inverse_grad(a, b, v):
    out = np.empty(v.size)
    for i in range(v.size):
        out[i], _ = inverse_grad1(a[i], b[i], v[i])
    return out
