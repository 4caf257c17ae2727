"""Gittins and Whittle indices by calibration against a known arm.

A risky Beta(s, f) arm is compared with a known arm paying ``p`` per step.
The index is the ``p`` at which a decision maker with ``r`` decisions left is
indifferent between retiring on the known arm now and sampling the risky arm
once more, then continuing optimally.

Two modes share one dynamic program and differ only in ``r``:

* ``infinite-gittins`` uses the absolute truncation grid: a state with
  ``s + f = n`` has ``r = T - n`` decisions left, ``T`` the truncation horizon.
* ``finite-whittle`` takes ``r`` from the caller (the patients left in the
  trial), and allows ``d = 1``, where discounted sums become plain counts.

For the Gittins mode the known arm's payoff over ``r`` steps is
``p (1 - d^r) / (1 - d)`` by default (``known_payoff="truncated"``).  With
``known_payoff="stationary"`` the known arm always pays its infinite-horizon
value ``p / (1 - d)``, so truncation only limits how long the risky arm can be
explored; this needs a much shorter grid for discount factors close to 1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from numbers import Integral, Real

import numpy as np

from ..errors import ConfigError, DomainError
from . import _kernels

GITTINS = "infinite-gittins"
WHITTLE = "finite-whittle"
_MODE_ALIASES = {
    "gittins": GITTINS, "infinite-gittins": GITTINS, "infinite": GITTINS,
    "whittle": WHITTLE, "finite-whittle": WHITTLE, "finite": WHITTLE,
}


@dataclass(frozen=True)
class IndexConfig:
    """Parameters of the calibration dynamic program."""

    mode: str = GITTINS
    discount: float = 0.99
    truncation_horizon: int = 750
    tolerance: float = 1e-6
    known_payoff: str = "truncated"
    solver: str = "newton"

    def __post_init__(self):
        mode = _MODE_ALIASES.get(str(self.mode).lower())
        if mode is None:
            raise ConfigError(f"unknown index mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)

        if isinstance(self.discount, bool) or not isinstance(self.discount, Real):
            raise ConfigError(f"discount must be a real number, got {self.discount!r}")
        d = float(self.discount)
        object.__setattr__(self, "discount", d)
        if not 0.0 <= d <= 1.0:
            raise ConfigError(f"discount must lie in [0, 1], got {d}")
        if mode == GITTINS and d >= 1.0:
            raise ConfigError("the infinite-horizon Gittins index needs discount < 1")

        T = self.truncation_horizon
        if isinstance(T, bool) or not isinstance(T, Integral) or T < 2:
            raise ConfigError(f"truncation_horizon must be an integer >= 2, got {T!r}")
        object.__setattr__(self, "truncation_horizon", int(T))

        if isinstance(self.tolerance, bool) or not isinstance(self.tolerance, Real) \
                or not self.tolerance > 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance!r}")
        object.__setattr__(self, "tolerance", float(self.tolerance))

        if self.known_payoff not in ("truncated", "stationary"):
            raise ConfigError(f"known_payoff must be 'truncated' or 'stationary', "
                              f"got {self.known_payoff!r}")
        if mode == WHITTLE and self.known_payoff != "truncated":
            raise ConfigError("the finite-horizon index only supports known_payoff='truncated'")
        if self.solver not in ("newton", "bisection"):
            raise ConfigError(f"solver must be 'newton' or 'bisection', got {self.solver!r}")

    @property
    def is_gittins(self) -> bool:
        return self.mode == GITTINS

    @property
    def stationary(self) -> bool:
        return self.known_payoff == "stationary"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "IndexConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown IndexConfig fields: {sorted(unknown)}")
        return cls(**data)


def _check_state(s, f):
    for name, v in (("total_s", s), ("total_f", f)):
        if isinstance(v, bool) or not isinstance(v, Integral):
            raise DomainError(f"{name} must be an integer, got {v!r}")
        if v < 1:
            raise DomainError(f"{name} must be >= 1, got {v}")


def steps_left(total_s: int, total_f: int, cfg: IndexConfig, remaining: int | None = None) -> int:
    """Number of decisions ``r`` the calibration problem at this cell spans."""
    _check_state(total_s, total_f)
    T = cfg.truncation_horizon
    if cfg.is_gittins:
        if remaining is not None:
            raise DomainError("the Gittins index uses the absolute grid; do not pass remaining")
        if total_s + total_f > T - 1:
            raise DomainError(f"state ({total_s}, {total_f}) lies outside the truncation grid "
                              f"(total_s + total_f must be <= {T - 1})")
        return T - total_s - total_f
    if remaining is None:
        if total_s + total_f > T - 1:
            raise DomainError(f"state ({total_s}, {total_f}) lies outside the truncation grid "
                              f"(total_s + total_f must be <= {T - 1})")
        return T - total_s - total_f
    if isinstance(remaining, bool) or not isinstance(remaining, Integral):
        raise DomainError(f"remaining must be an integer, got {remaining!r}")
    if remaining == 0:
        raise DomainError("remaining = 0 is the absorbing state; it carries no index")
    if not 1 <= remaining <= T:
        raise DomainError(f"remaining must lie in [1, {T}], got {remaining}")
    return int(remaining)


def _payoff_factor(j: int, cfg: IndexConfig) -> float:
    d = cfg.discount
    if cfg.stationary:
        return 1.0 / (1.0 - d)
    if d == 1.0:
        return float(j)
    return (1.0 - d ** j) / (1.0 - d)


def _risky_and_known(s: int, f: int, p: float, r: int, cfg: IndexConfig) -> tuple[float, float]:
    """Reference backward induction in plain numpy.

    Returns (value of sampling the risky arm first, value of retiring now).
    Layer ``k`` holds the ``k + 1`` states reachable after ``k`` more
    observations, indexed by the number of extra successes.
    """
    d = cfg.discount
    known0 = p * _payoff_factor(r, cfg)
    if r == 1:
        return s / (s + f) * _payoff_factor(1, cfg), known0
    k = r - 1
    i = np.arange(k + 1)
    mu = (s + i) / (s + f + k)
    v = np.maximum(p, mu) * _payoff_factor(1, cfg)
    for k in range(r - 2, -1, -1):
        i = np.arange(k + 1)
        mu = (s + i) / (s + f + k)
        risky = mu * (1.0 + d * v[1:]) + (1.0 - mu) * d * v[:-1]
        if k == 0:
            return float(risky[0]), known0
        v = np.maximum(p * _payoff_factor(r - k, cfg), risky)
    raise AssertionError("unreachable")


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")


def calibration_value(total_s: int, total_f: int, p: float, cfg: IndexConfig,
                      remaining: int | None = None) -> float:
    """Optimal value of the known-arm calibration problem started at (total_s, total_f)."""
    _check_p(p)
    r = steps_left(total_s, total_f, cfg, remaining)
    risky, known = _risky_and_known(total_s, total_f, float(p), r, cfg)
    return max(risky, known)


def indifference_gap(total_s: int, total_f: int, p: float, cfg: IndexConfig,
                     remaining: int | None = None) -> float:
    """Known-arm value minus the value of one risky step followed by optimal play.

    Nondecreasing in ``p``; its root is the index.
    """
    _check_p(p)
    r = steps_left(total_s, total_f, cfg, remaining)
    risky, known = _risky_and_known(total_s, total_f, float(p), r, cfg)
    return known - risky


def _solve(s, f, r, cfg):
    return float(_kernels.solve_index(float(s), float(f), int(r), cfg.discount, cfg.stationary,
                                      cfg.tolerance, cfg.solver == "newton"))


def gittins_index(total_s: int, total_f: int, cfg: IndexConfig) -> float:
    if not cfg.is_gittins:
        raise ConfigError("gittins_index needs an infinite-gittins IndexConfig")
    r = steps_left(total_s, total_f, cfg)
    return _solve(total_s, total_f, r, cfg)


def whittle_index(total_s: int, total_f: int, remaining: int, cfg: IndexConfig) -> float:
    if cfg.is_gittins:
        raise ConfigError("whittle_index needs a finite-whittle IndexConfig")
    if remaining is None:
        raise DomainError("whittle_index needs the remaining horizon")
    r = steps_left(total_s, total_f, cfg, remaining)
    if r == 1:
        return total_s / (total_s + total_f)
    return _solve(total_s, total_f, r, cfg)


def solve_cells(s: np.ndarray, f: np.ndarray, r: np.ndarray, cfg: IndexConfig) -> np.ndarray:
    """Indices for many cells at once; ``r`` is the step count per cell (>= 1).

    Cells are solved in parallel by the compiled kernel.
    """
    s = np.ascontiguousarray(s, dtype=np.float64)
    f = np.ascontiguousarray(f, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.int64)
    if s.size == 0:
        return np.empty(0)
    return _kernels.solve_batch(s, f, r, cfg.discount, cfg.stationary, cfg.tolerance,
                                cfg.solver == "newton")
