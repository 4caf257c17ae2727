"""Tests of an experimental arm against the control."""

from __future__ import annotations

import math

import numpy as np


def z_statistic(s1: int, n1: int, s0: int, n0: int) -> float:
    """Pooled two-proportion z for H0: p0 >= p1; 0.0 when undefined."""
    if n1 == 0 or n0 == 0:
        return 0.0
    pooled = (s1 + s0) / (n1 + n0)
    var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n0)
    if var <= 0.0:
        return 0.0
    return (s1 / n1 - s0 / n0) / math.sqrt(var)


def z_test(record, arm: int, cutoff: float) -> bool:
    if arm == 0:
        raise ValueError("the control cannot be tested against itself")
    return z_statistic(int(record.s[arm]), int(record.n[arm]),
                       int(record.s[0]), int(record.n[0])) > cutoff


def _log_choose(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def fisher_exact_pvalue(s1: int, n1: int, s0: int, n0: int) -> float:
    """One-sided P(X >= s1) for X hypergeometric given both margins.

    Large p1 = s1/n1 relative to the control gives small values.  Terms are
    accumulated in log space from the observed table outward.
    """
    if n1 == 0 or n0 == 0 or s1 == 0:
        return 1.0
    if not (0 <= s1 <= n1 and 0 <= s0 <= n0):
        raise ValueError("need 0 <= s1 <= n1 and 0 <= s0 <= n0")
    m = s1 + s0
    N = n1 + n0
    hi = min(n1, m)
    log0 = _log_choose(m, s1) + _log_choose(N - m, n1 - s1) - _log_choose(N, n1)
    if hi == s1:
        return min(1.0, math.exp(log0))
    x = np.arange(s1, hi, dtype=np.float64)
    # pmf(x + 1) / pmf(x)
    steps = np.log(m - x) + np.log(n1 - x) - np.log(x + 1.0) - np.log(N - m - n1 + x + 1.0)
    logs = np.concatenate(([0.0], np.cumsum(steps)))
    top = logs.max()
    total = log0 + top + math.log(float(np.exp(logs - top).sum()))
    return min(1.0, math.exp(total))


def threshold_from_pvalues(pvalues, target_alpha: float) -> float:
    """Largest threshold c with mean(pvalues <= c) <= target_alpha, chosen among observed values.

    When no observed value can be admitted the result lies below every
    p-value (0.0, or just below 0 if a p-value is exactly 0).
    """
    p = np.sort(np.asarray(pvalues, dtype=np.float64))
    R = p.size
    allowed = math.floor(target_alpha * R + 1e-9)
    if allowed >= R:
        return 1.0
    below = p[:allowed][p[:allowed] < p[allowed]]
    if below.size:
        return float(below[-1])
    return 0.0 if p[0] > 0.0 else float(np.nextafter(0.0, -1.0))
