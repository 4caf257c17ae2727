"""A single simulated trial."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..policies import Policy, policy_from_spec
from ..rng import Streams
from .scenario import Scenario


@dataclass(frozen=True, eq=False)
class TrialRecord:
    """Allocation and response of every patient, plus per-arm totals.

    ``n[k]`` counts patients on arm k and ``s[k]`` their successes (priors
    excluded).
    """

    allocations: np.ndarray
    outcomes: np.ndarray
    n: np.ndarray
    s: np.ndarray

    @property
    def T(self) -> int:
        return int(self.allocations.size)

    @property
    def K(self) -> int:
        return int(self.n.size)

    @property
    def successes(self) -> int:
        return int(self.s.sum())

    def one_hot(self) -> np.ndarray:
        """``a[t, k] = 1`` iff patient t was given arm k."""
        a = np.zeros((self.T, self.K), dtype=np.int8)
        a[np.arange(self.T), self.allocations] = 1
        return a

    @classmethod
    def from_allocations(cls, allocations, outcomes, K: int) -> "TrialRecord":
        alloc = np.asarray(allocations, dtype=np.int64)
        out = np.asarray(outcomes, dtype=bool)
        n = np.bincount(alloc, minlength=K)
        s = np.bincount(alloc, weights=out, minlength=K).astype(np.int64)
        return cls(alloc, out, n, s)


def build_policy(scenario: Scenario) -> Policy:
    return policy_from_spec(scenario.policy, scenario.T, scenario.priors)


def play(choose, T: int, true_p, priors, streams: Streams):
    """Run ``choose`` for T patients; returns allocation and outcome lists.

    Each patient's response costs one uniform from the outcome stream and is
    a success iff it falls below the chosen arm's true rate.
    """
    s = [a for a, _ in priors]
    f = [b for _, b in priors]
    p = list(true_p)
    draw = streams.outcome.random
    alloc = [0] * T
    out = [False] * T
    for t in range(T):
        a = choose(t, s, f, streams)
        if draw() < p[a]:
            s[a] += 1
            out[t] = True
        else:
            f[a] += 1
        alloc[t] = a
    return alloc, out


def run_trial(scenario: Scenario, rng=None, policy: Policy | None = None) -> TrialRecord:
    """Simulate one trial; ``rng`` is a Streams, Generator or int seed (default: scenario seed)."""
    streams = Streams.coerce(scenario.seed if rng is None else rng)
    policy = policy or build_policy(scenario)
    max_prior = max(a + b for a, b in scenario.priors)
    choose = policy.chooser(scenario.T, scenario.K, max_prior)
    alloc, out = play(choose, scenario.T, scenario.true_p, scenario.priors, streams)
    return TrialRecord.from_allocations(alloc, out, scenario.K)
