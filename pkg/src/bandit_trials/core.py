"""Beta-Bernoulli arm states and their transitions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral

from .errors import ConfigError


def _check_count(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")


@dataclass(frozen=True, slots=True)
class ArmState:
    """Prior pseudo-counts plus observed successes/failures for one arm.

    The posterior on the arm's success rate is Beta(total_s, total_f).
    """

    prior_s: int = 1
    prior_f: int = 1
    obs_s: int = 0
    obs_f: int = 0

    def __post_init__(self):
        _check_count("prior_s", self.prior_s, 1)
        _check_count("prior_f", self.prior_f, 1)
        _check_count("obs_s", self.obs_s, 0)
        _check_count("obs_f", self.obs_f, 0)

    @property
    def total_s(self) -> int:
        return self.prior_s + self.obs_s

    @property
    def total_f(self) -> int:
        return self.prior_f + self.obs_f

    @property
    def total(self) -> int:
        return self.prior_s + self.prior_f + self.obs_s + self.obs_f

    @property
    def pulls(self) -> int:
        return self.obs_s + self.obs_f

    @classmethod
    def from_totals(cls, total_s: int, total_f: int) -> "ArmState":
        """State with a Beta(total_s, total_f) prior and nothing observed."""
        return cls(total_s, total_f, 0, 0)


@dataclass(frozen=True, slots=True)
class Outcome:
    success: bool


SUCCESS = Outcome(True)
FAILURE = Outcome(False)


def posterior_mean(state: ArmState) -> float:
    s = state.prior_s + state.obs_s
    return s / (s + state.prior_f + state.obs_f)


def posterior_mean_exact(state: ArmState) -> Fraction:
    return Fraction(state.total_s, state.total)


def apply_outcome(state: ArmState, outcome: Outcome | bool) -> ArmState:
    success = outcome.success if isinstance(outcome, Outcome) else bool(outcome)
    if success:
        return ArmState(state.prior_s, state.prior_f, state.obs_s + 1, state.obs_f)
    return ArmState(state.prior_s, state.prior_f, state.obs_s, state.obs_f + 1)


def sample_outcome(rng, true_p: float) -> Outcome:
    """Bernoulli(true_p) draw using exactly one ``rng.random()`` call."""
    if not 0.0 <= true_p <= 1.0:
        raise ConfigError(f"success probability must lie in [0, 1], got {true_p}")
    return SUCCESS if rng.random() < true_p else FAILURE
