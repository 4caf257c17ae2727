"""Exact joint-state dynamic programming for small bandit instances.

These routines enumerate the full joint information state of all arms and so
serve as ground truth for index policies on toy problems.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Callable, NamedTuple, Sequence

from ..core import ArmState
from ..errors import CapacityError, ConfigError

MAX_JOINT_STATES = 10 ** 7


class OracleResult(NamedTuple):
    value: float | Fraction
    first_action: int
    tie_set: tuple[int, ...]


def joint_state_count(arms: int, horizon: int) -> int:
    """Joint states reachable within ``horizon`` pulls: 2K counters summing to <= horizon."""
    return comb(horizon + 2 * arms, 2 * arms)


def _setup(states, horizon, discount, exact):
    if len(states) < 1:
        raise ConfigError("need at least one arm")
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    if not 0 <= discount <= 1:
        raise ConfigError("discount must lie in [0, 1]")
    n = joint_state_count(len(states), horizon)
    if n > MAX_JOINT_STATES:
        raise CapacityError(f"{n} joint states exceed the enumeration limit of {MAX_JOINT_STATES}")
    num = Fraction if exact else float
    d = Fraction(discount).limit_denominator(10 ** 12) if exact else float(discount)
    start = tuple((st.total_s, st.total_f) for st in states)
    return num, d, start


def _successor(x, k, success):
    s, f = x[k]
    new = (s + 1, f) if success else (s, f + 1)
    return x[:k] + (new,) + x[k + 1:]


def finite_horizon_dp_oracle(states: Sequence[ArmState], horizon: int, discount: float = 1.0,
                             exact: bool = False) -> OracleResult:
    """Optimal expected total discounted successes over ``horizon`` pulls.

    ``first_action`` is the lowest-numbered optimal arm and ``tie_set`` lists
    all optimal first arms.
    """
    num, d, start = _setup(states, horizon, discount, exact)
    K = len(start)
    memo: dict = {}

    def q_values(x, h):
        out = []
        for k in range(K):
            s, f = x[k]
            mu = num(s) / num(s + f)
            if h == 1:
                out.append(mu)
                continue
            up = value(_successor(x, k, True), h - 1)
            down = value(_successor(x, k, False), h - 1)
            out.append(mu + d * (mu * up + (1 - mu) * down))
        return out

    def value(x, h):
        key = (x, h)
        if key not in memo:
            memo[key] = max(q_values(x, h))
        return memo[key]

    if horizon == 0:
        return OracleResult(num(0), 0, tuple(range(K)))
    q = q_values(start, horizon)
    best = max(q)
    if exact:
        ties = tuple(k for k, v in enumerate(q) if v == best)
    else:
        ties = tuple(k for k, v in enumerate(q) if v >= best - 1e-12 * max(1.0, abs(best)))
    return OracleResult(best, ties[0], ties)


def index_policy_value(states: Sequence[ArmState], horizon: int,
                       score: Callable[[int, int, int], float], discount: float = 1.0,
                       exact: bool = False, tie_tol: float = 1e-9) -> float | Fraction:
    """Expected discounted successes of an index rule, by exact rollout over the outcome tree.

    ``score(total_s, total_f, remaining)`` is the arm's index with
    ``remaining`` pulls left including the current one.  Tied arms (within
    ``tie_tol``) are chosen uniformly at random, so their values are averaged.
    """
    num, d, start = _setup(states, horizon, discount, exact)
    K = len(start)
    memo: dict = {}

    def value(x, h):
        if h == 0:
            return num(0)
        key = (x, h)
        if key in memo:
            return memo[key]
        scores = [score(s, f, h) for s, f in x]
        top = max(scores)
        chosen = [k for k in range(K) if scores[k] >= top - tie_tol]
        total = num(0)
        for k in chosen:
            s, f = x[k]
            mu = num(s) / num(s + f)
            total += mu + d * (mu * value(_successor(x, k, True), h - 1)
                               + (1 - mu) * value(_successor(x, k, False), h - 1))
        memo[key] = total / len(chosen)
        return memo[key]

    return value(start, horizon)
