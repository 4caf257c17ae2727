"""Compiled calibration kernels.

A cell is (s, f, r): posterior Beta(s, f) and ``r`` >= 1 decisions left,
counting the current one.  For a known arm paying ``p`` per step the
calibration problem is solved by backward induction over the triangle of
states reachable in ``r - 1`` further steps; the index is the ``p`` at which
retiring to the known arm and sampling the risky arm once more are equally
good.

``gap`` below is (known-arm value) - (value of one risky step, then optimal
play) at the root state.  It is concave and increasing in ``p`` with slope at
least 1, which is what both root finders rely on.
"""

import os

import numba
import numpy as np
from numba import njit, prange

# the bundled TBB is too old for numba; pick a layer that needs no extra library
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

_MAX_ITER = 200


@njit(cache=True)
def _payoff_factor(j, d, stationary):
    # discounted number of steps the known arm pays over j remaining steps
    if stationary:
        return 1.0 / (1.0 - d)
    if d == 1.0:
        return float(j)
    return (1.0 - d ** j) / (1.0 - d)


@njit(cache=True)
def gap_and_slope(s, f, p, r, d, stationary, v, g):
    """Return (gap, d gap / d p) at price ``p``; ``v`` and ``g`` are scratch of length >= r."""
    if r == 1:
        a = _payoff_factor(1, d, stationary)
        return (p - s / (s + f)) * a, a
    k = r - 1
    inv = 1.0 / (s + f + k)
    a = _payoff_factor(1, d, stationary)
    for i in range(k + 1):
        mu = (s + i) * inv
        if p > mu:
            v[i] = p * a
            g[i] = a
        else:
            v[i] = mu * a
            g[i] = 0.0
    for k in range(r - 2, 0, -1):
        a = _payoff_factor(r - k, d, stationary)
        known = p * a
        inv = 1.0 / (s + f + k)
        for i in range(k + 1):
            mu = (s + i) * inv
            risky = mu * (1.0 + d * v[i + 1]) + (1.0 - mu) * d * v[i]
            if known > risky:
                v[i] = known
                g[i] = a
            else:
                v[i] = risky
                g[i] = d * (mu * g[i + 1] + (1.0 - mu) * g[i])
    a = _payoff_factor(r, d, stationary)
    mu = s / (s + f)
    risky = mu * (1.0 + d * v[1]) + (1.0 - mu) * d * v[0]
    return p * a - risky, a - d * (mu * g[1] + (1.0 - mu) * g[0])


@njit(cache=True)
def solve_index(s, f, r, d, stationary, tol, newton):
    mu0 = s / (s + f)
    if r == 1:
        return mu0
    v = np.empty(r)
    g = np.empty(r)
    # gap(mu0) <= 0 (sampling forever earns mu0 per step) and gap(1) >= 0
    lo = mu0
    hi = 1.0
    if not newton:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            gm, _ = gap_and_slope(s, f, mid, r, d, stationary, v, g)
            if gm < 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    # Newton from the left never overshoots a concave increasing function;
    # the bracket [lo, hi] is kept so rounding cannot derail it.
    x = lo
    for _ in range(_MAX_ITER):
        if hi - lo <= tol:
            break
        gx, slope = gap_and_slope(s, f, x, r, d, stationary, v, g)
        if gx == 0.0:
            return x
        if gx > 0.0:
            hi = x
            x = 0.5 * (lo + hi)
            continue
        lo = x
        step = -gx / slope
        if step < 0.5 * tol:
            probe = lo + tol
            if probe >= hi:
                break
            gp, _ = gap_and_slope(s, f, probe, r, d, stationary, v, g)
            if gp >= 0.0:
                hi = probe
                break
            lo = probe
            x = probe
            continue
        x = lo + step
        if x >= hi:
            x = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


@njit(cache=True, parallel=True)
def solve_batch(s, f, r, d, stationary, tol, newton):
    out = np.empty(s.shape[0])
    for i in prange(s.shape[0]):
        out[i] = solve_index(s[i], f[i], r[i], d, stationary, tol, newton)
    return out
