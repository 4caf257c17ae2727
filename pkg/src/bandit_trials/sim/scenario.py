"""Scenario description and its strict JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Integral, Real
from pathlib import Path

from ..errors import ConfigError
from ..policies import RULES

TEST_KINDS = ("z-cutoff", "fisher", "fisher-adjusted")
POWER_DEFINITIONS = ("any-effective", "best-only")


def _is_int(v):
    return isinstance(v, Integral) and not isinstance(v, bool)


def _is_real(v):
    return isinstance(v, Real) and not isinstance(v, bool)


@dataclass(frozen=True)
class TestSpec:
    """How a finished trial is tested against the control (arm 0).

    * ``z-cutoff``: reject arm k when the pooled z-statistic exceeds ``cutoff``
      (pass a Bonferroni-adjusted cutoff for several arms).
    * ``fisher``: reject arm k when its one-sided Fisher p-value times
      ``K - 1`` is below ``alpha``.
    * ``fisher-adjusted``: as ``fisher``, with the threshold calibrated by
      simulation under H0 so the design's size is at most ``target_alpha``.
    """

    __test__ = False

    kind: str
    cutoff: float | None = None
    alpha: float = 0.05
    target_alpha: float = 0.05
    power: str = "any-effective"

    def __post_init__(self):
        if self.kind not in TEST_KINDS:
            raise ConfigError(f"unknown test kind {self.kind!r}; expected one of {TEST_KINDS}")
        if self.kind == "z-cutoff" and not _is_real(self.cutoff):
            raise ConfigError("z-cutoff test needs a numeric 'cutoff'")
        for name in ("alpha", "target_alpha"):
            v = getattr(self, name)
            if not _is_real(v) or not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v!r}")
        if self.power not in POWER_DEFINITIONS:
            raise ConfigError(f"power must be one of {POWER_DEFINITIONS}, got {self.power!r}")

    @classmethod
    def from_dict(cls, data) -> "TestSpec":
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("test must be an object with a 'kind' field")
        allowed = {"kind", "power"} | {
            "z-cutoff": {"cutoff"}, "fisher": {"alpha"}, "fisher-adjusted": {"target_alpha"},
        }.get(data["kind"], set())
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown fields for test {data['kind']!r}: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "z-cutoff":
            out["cutoff"] = self.cutoff
        elif self.kind == "fisher":
            out["alpha"] = self.alpha
        else:
            out["target_alpha"] = self.target_alpha
        if self.power != "any-effective":
            out["power"] = self.power
        return out

    def describe(self) -> str:
        if self.kind == "z-cutoff":
            return f"pooled two-proportion z > {self.cutoff}"
        if self.kind == "fisher":
            return f"one-sided Fisher exact, Bonferroni p < {self.alpha}"
        return f"one-sided Fisher exact, threshold calibrated under H0 to size <= {self.target_alpha}"


SCENARIO_FIELDS = ("K", "T", "priors", "true_p", "policy", "test", "replications", "seed",
                   "calibration_replications")


@dataclass(frozen=True)
class Scenario:
    K: int
    T: int
    true_p: tuple[float, ...]
    policy: dict
    test: TestSpec
    replications: int = 10000
    seed: int = 0
    priors: tuple[tuple[int, int], ...] = ()
    calibration_replications: int = 10000

    def __post_init__(self):
        if not _is_int(self.K) or self.K < 1:
            raise ConfigError(f"K must be a positive integer, got {self.K!r}")
        if not _is_int(self.T) or self.T < 1:
            raise ConfigError(f"T must be a positive integer, got {self.T!r}")
        p = tuple(self.true_p)
        if len(p) != self.K:
            raise ConfigError(f"true_p has {len(p)} entries, expected K = {self.K}")
        if not all(_is_real(x) and 0.0 <= x <= 1.0 for x in p):
            raise ConfigError("true_p entries must be probabilities in [0, 1]")
        object.__setattr__(self, "true_p", tuple(float(x) for x in p))
        priors = tuple(tuple(x) for x in self.priors) or ((1, 1),) * self.K
        if len(priors) != self.K or any(len(x) != 2 for x in priors):
            raise ConfigError(f"priors must hold K = {self.K} pairs [s, f]")
        if not all(_is_int(v) and v >= 1 for x in priors for v in x):
            raise ConfigError("prior counts must be integers >= 1")
        object.__setattr__(self, "priors", tuple((int(a), int(b)) for a, b in priors))
        if not isinstance(self.policy, dict) or "rule" not in self.policy:
            raise ConfigError("policy must be an object with a 'rule' field")
        if str(self.policy["rule"]).upper() not in RULES:
            raise ConfigError(f"unknown rule {self.policy['rule']!r}")
        if isinstance(self.test, dict):
            object.__setattr__(self, "test", TestSpec.from_dict(self.test))
        if not isinstance(self.test, TestSpec):
            raise ConfigError("test must be a test specification")
        if not _is_int(self.replications) or self.replications < 1:
            raise ConfigError(f"replications must be a positive integer, got {self.replications!r}")
        if not _is_int(self.calibration_replications) or self.calibration_replications < 1:
            raise ConfigError("calibration_replications must be a positive integer")
        if not _is_int(self.seed) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        if self.K < 2 and self.test.kind != "z-cutoff":
            raise ConfigError("a test against the control needs K >= 2")

    @property
    def rule(self) -> str:
        return str(self.policy["rule"]).upper()

    @property
    def hypothesis(self) -> str:
        return "H0" if len(set(self.true_p)) == 1 else "H1"

    @property
    def best_arm(self) -> int:
        """Arm with the largest true_p; the highest such index on ties."""
        top = max(self.true_p)
        return max(k for k, v in enumerate(self.true_p) if v == top)

    @property
    def unique_best(self) -> bool:
        return self.true_p.count(max(self.true_p)) == 1

    @property
    def upper_bound_exact(self) -> Fraction:
        """T * max(true_p) with true_p read as the decimals it was written as."""
        return self.T * Fraction(repr(max(self.true_p)))

    @property
    def upper_bound(self) -> float:
        return float(self.upper_bound_exact)

    def null(self) -> "Scenario":
        """The same design with every arm at the control's success rate."""
        return replace(self, true_p=(self.true_p[0],) * self.K)

    def to_dict(self) -> dict:
        return {
            "K": self.K, "T": self.T, "priors": [list(x) for x in self.priors],
            "true_p": list(self.true_p), "policy": dict(self.policy), "test": self.test.to_dict(),
            "replications": self.replications, "seed": self.seed,
            "calibration_replications": self.calibration_replications,
        }

    @classmethod
    def from_dict(cls, data) -> "Scenario":
        if not isinstance(data, dict):
            raise ConfigError("scenario must be a JSON object")
        unknown = set(data) - set(SCENARIO_FIELDS)
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        missing = {"K", "T", "true_p", "policy", "test"} - set(data)
        if missing:
            raise ConfigError(f"missing scenario fields: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
        return cls.from_json(text)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
