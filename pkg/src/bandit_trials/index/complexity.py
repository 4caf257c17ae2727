"""Operation counts for solving a K-armed Bernoulli bandit three ways.

With uniform priors and truncation horizon ``T`` the joint state after
``t`` observations has ``2K + t`` total pseudo-counts, and the last decision
is taken at ``2K + t = T - 1``.

* DP: one value evaluation per joint state, ``C(T - 1, 2K)``.
* Index: one calibration per single-arm state with ``s + f <= T - 1``,
  ``C(T - 1, 2) = (T - 1)(T - 2) / 2``.
* Brute force: one evaluation per node of the history tree, where each node
  branches on (arm, outcome), ``sum_{t < T - 2K} (2K)^t``.
"""

from __future__ import annotations

import csv
import io
from math import comb
from typing import NamedTuple

from ..errors import DomainError


class Complexity(NamedTuple):
    brute_dp_count: int
    index_count: int


def _check(horizon, arms):
    if arms < 1:
        raise DomainError(f"need at least one arm, got {arms}")
    if horizon - 2 * arms - 1 < 0:
        raise DomainError(f"horizon {horizon} too short for {arms} arms "
                          f"(need horizon >= {2 * arms + 1})")


def complexity_estimates(horizon: int, arms: int) -> Complexity:
    """Exact DP and index operation counts."""
    _check(horizon, arms)
    return Complexity(comb(horizon - 1, 2 * arms), comb(horizon - 1, 2))


def brute_force_count(horizon: int, arms: int) -> int:
    _check(horizon, arms)
    b = 2 * arms
    return sum(b ** t for t in range(horizon - b))


def complexity_rows(horizons, arms: int = 3):
    for T in horizons:
        c = complexity_estimates(T, arms)
        yield T, brute_force_count(T, arms), c.brute_dp_count, c.index_count


def complexity_csv(horizons, arms: int = 3) -> str:
    """Plot-ready CSV; counts are exact integers."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("T", "brute_force", "dp", "index"))
    for row in complexity_rows(horizons, arms):
        w.writerow(row)
    return buf.getvalue()
