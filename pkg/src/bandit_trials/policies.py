"""Patient allocation rules.

Every decision consumes a fixed number of variates from each named stream, so
a trial's random sequence never depends on which branch a rule took:

====== ============================================================
rule   variates per decision
====== ============================================================
all    1 tie-break uniform (drawn even when no tie exists)
FR     + 1 allocation uniform
TS     + ``ts_samples * K`` beta draws (thompson) + 1 allocation uniform
RBI    + K standard exponentials (perturbation)
RGI    + K standard exponentials (perturbation)
CG     + 1 allocation uniform (used only by the random control schedule)
====== ============================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ArmState, posterior_mean
from .errors import ConfigError
from .index.calibration import IndexConfig
from .index.tables import IndexTable, cached_table
from .rng import Streams

RULES = ("FR", "CB", "TS", "UCB", "RBI", "RGI", "GI", "WI", "CG")
_GITTINS_RULES = ("GI", "RGI", "CG")


@dataclass(frozen=True)
class AllocationContext:
    t: int
    T: int
    states: Sequence[ArmState]
    rng: Streams

    def __post_init__(self):
        if not 0 <= self.t < self.T:
            raise ConfigError(f"patient index t={self.t} outside [0, {self.T})")
        if len(self.states) < 1:
            raise ConfigError("need at least one arm")


@dataclass(frozen=True, eq=False)
class Policy:
    """An allocation rule plus its parameters.

    ``perturbation`` chooses how the exponential noise of RBI/RGI is scaled:
    ``"rate"`` gives Z mean K, ``"mean"`` gives Z mean 1/K.  ``tie_break`` is
    ``"random"`` (uniform among tied arms) or ``"lowest"`` (lowest arm id).
    ``cg_schedule`` is ``"cycle"`` (patients t = 0, K, 2K, ... go to control)
    or ``"random"`` (each patient goes to control with probability 1/K).
    """

    kind: str
    table: IndexTable | None = None
    ts_samples: int = 1024
    perturbation: str = "rate"
    tie_break: str = "random"
    cg_schedule: str = "cycle"
    _choosers: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in RULES:
            raise ConfigError(f"unknown rule {self.kind!r}; expected one of {', '.join(RULES)}")
        object.__setattr__(self, "kind", kind)
        if self.perturbation not in ("rate", "mean"):
            raise ConfigError(f"perturbation must be 'rate' or 'mean', got {self.perturbation!r}")
        if self.tie_break not in ("random", "lowest"):
            raise ConfigError(f"tie_break must be 'random' or 'lowest', got {self.tie_break!r}")
        if self.cg_schedule not in ("cycle", "random"):
            raise ConfigError(f"cg_schedule must be 'cycle' or 'random', got {self.cg_schedule!r}")
        if isinstance(self.ts_samples, bool) or not isinstance(self.ts_samples, int) \
                or self.ts_samples < 1:
            raise ConfigError(f"ts_samples must be a positive integer, got {self.ts_samples!r}")
        if kind in _GITTINS_RULES:
            if self.table is None:
                raise ConfigError(f"{kind} needs a Gittins index table")
            if not self.table.is_gittins:
                raise ConfigError(f"{kind} needs an infinite-gittins table")
        elif kind == "WI":
            if self.table is None:
                raise ConfigError("WI needs a Whittle index table")
            if self.table.is_gittins:
                raise ConfigError("WI needs a finite-whittle table")

    def chooser(self, T: int, K: int, max_prior: int, strict: bool = True):
        """A fast ``choose(t, s, f, streams) -> arm`` over lists of posterior totals.

        ``max_prior`` bounds ``s + f`` for every arm before the first patient.
        With ``strict`` the index table must cover every state a trial can
        reach; otherwise only what the table holds is loaded.
        """
        key = (T, K, max_prior, strict)
        if key not in self._choosers:
            self._choosers[key] = _make_chooser(self, T, K, max_prior, strict)
        return self._choosers[key]


def _pick(scores, u, lowest):
    best = max(scores)
    ties = [k for k, v in enumerate(scores) if v == best]
    if len(ties) == 1 or lowest:
        return ties[0]
    return ties[int(u * len(ties))]


def _gittins_rows(table: IndexTable, T: int, max_prior: int, strict: bool = True):
    need = max_prior + T - 1
    if table.max_n < need:
        if strict:
            raise ConfigError(f"Gittins table max_n={table.max_n} does not cover s + f up to {need}")
        need = table.max_n
    return table.values[:need + 1, :need + 1].tolist()


def _whittle_rows(table: IndexTable, T: int, max_prior: int, strict: bool = True):
    rows = [None] * (T + 1)
    for r in range(1, T + 1):
        need = max_prior + T - r
        if not (r in table.remaining and table.max_n >= need
                and (table.reach is None or table.reach >= max_prior)):
            if strict:
                raise ConfigError(f"Whittle table does not cover remaining = {r} "
                                  f"with s + f <= {need}")
            if r not in table.remaining:
                continue
            need = min(need, table.max_n)
        rows[r] = table.grid(r)[:need + 1, :need + 1].tolist()
    return rows


def _make_chooser(policy: Policy, T: int, K: int, max_prior: int, strict: bool):
    kind = policy.kind
    lowest = policy.tie_break == "lowest"
    arms = range(K)

    if kind == "FR":
        def choose(t, s, f, st):
            st.tiebreak.random()
            return min(int(st.allocation.random() * K), K - 1)

    elif kind == "CB":
        def choose(t, s, f, st):
            return _pick([s[k] / (s[k] + f[k]) for k in arms], st.tiebreak.random(), lowest)

    elif kind == "UCB":
        def choose(t, s, f, st):
            c = 2.0 * math.log(max(t, 1))
            scores = [s[k] / (s[k] + f[k]) + math.sqrt(c / (s[k] + f[k])) for k in arms]
            return _pick(scores, st.tiebreak.random(), lowest)

    elif kind == "TS":
        n = policy.ts_samples

        def choose(t, s, f, st):
            p = _thompson(s, f, t, T, n, st.thompson.generator)
            u = st.allocation.random()
            st.tiebreak.random()
            acc = 0.0
            for k in arms:
                acc += p[k]
                if u < acc:
                    return k
            return K - 1

    elif kind in ("RBI", "RGI"):
        scale = float(K) if policy.perturbation == "rate" else 1.0 / K
        G = _gittins_rows(policy.table, T, max_prior, strict) if kind == "RGI" else None

        def choose(t, s, f, st):
            z = [st.perturbation.standard_exponential() * scale for _ in arms]
            if G is None:
                base = [s[k] / (s[k] + f[k]) for k in arms]
            else:
                base = [G[s[k]][f[k]] for k in arms]
            scores = [base[k] + z[k] * K / (s[k] + f[k]) for k in arms]
            return _pick(scores, st.tiebreak.random(), lowest)

    elif kind == "GI":
        G = _gittins_rows(policy.table, T, max_prior, strict)

        def choose(t, s, f, st):
            return _pick([G[s[k]][f[k]] for k in arms], st.tiebreak.random(), lowest)

    elif kind == "WI":
        W = _whittle_rows(policy.table, T, max_prior, strict)

        def choose(t, s, f, st):
            w = W[T - t]
            return _pick([w[s[k]][f[k]] for k in arms], st.tiebreak.random(), lowest)

    elif kind == "CG":
        if K < 2:
            raise ConfigError("CG needs a control and at least one experimental arm")
        G = _gittins_rows(policy.table, T, max_prior, strict)
        cycle = policy.cg_schedule == "cycle"
        exp_arms = range(1, K)

        def choose(t, s, f, st):
            u = st.allocation.random()
            v = st.tiebreak.random()
            if (t % K == 0) if cycle else (u < 1.0 / K):
                return 0
            return 1 + _pick([G[s[k]][f[k]] for k in exp_arms], v, lowest)

    else:  # pragma: no cover
        raise ConfigError(kind)
    return choose


def _totals(states):
    return [x.total_s for x in states], [x.total_f for x in states]


def select_arm(policy: Policy, ctx: AllocationContext) -> int:
    """Next arm for the patient described by ``ctx`` (arm 0 is the control)."""
    s, f = _totals(ctx.states)
    K = len(s)
    if policy.kind == "CG" and K < 2:
        raise ConfigError("CG needs a control and at least one experimental arm")
    if policy.table is not None:
        r = None if policy.table.is_gittins else ctx.T - ctx.t
        for a, b in zip(s, f):
            if not policy.table.covers(a, b, r):
                where = "" if r is None else f" at remaining {r}"
                raise ConfigError(f"index table does not cover state ({a}, {b}){where}")
    max_prior = max(2, max(a + b for a, b in zip(s, f)) - ctx.t)
    choose = policy.chooser(ctx.T, K, max_prior, strict=False)
    return choose(ctx.t, s, f, Streams.coerce(ctx.rng))


def _thompson(s, f, t, T, samples, gen):
    draws = gen.beta(np.asarray(s, float), np.asarray(f, float), size=(samples, len(s)))
    top = draws == draws.max(axis=1, keepdims=True)
    wins = (top / top.sum(axis=1, keepdims=True)).sum(axis=0) / samples
    w = wins ** (t / (2.0 * T))
    return (w / w.sum()).tolist()


def thompson_probs(states: Sequence[ArmState], t: int, T: int, samples: int = 1024,
                   rng=None) -> np.ndarray:
    """Posterior probability that each arm is best, tempered by ``c = t / (2T)``.

    The win probabilities are estimated from ``samples`` joint posterior draws.
    """
    if samples < 1 or T < 1:
        raise ConfigError("samples and T must be positive")
    if isinstance(rng, Streams):
        gen = rng.thompson.generator
    elif isinstance(rng, np.random.Generator):
        gen = rng
    else:
        gen = np.random.default_rng(rng)
    s, f = _totals(states)
    return np.array(_thompson(s, f, t, T, samples, gen))


def ucb_index(state: ArmState, t: int) -> float:
    n = state.total
    return posterior_mean(state) + math.sqrt(2.0 * math.log(max(t, 1)) / n)


def randomized_index(base: float, n: int, K: int, rng, perturbation: str = "rate") -> float:
    """``base + Z * K / n`` with Z exponential of mean K (rate) or 1/K (mean)."""
    scale = float(K) if perturbation == "rate" else 1.0 / K
    if isinstance(rng, Streams):
        rng = rng.perturbation
    return base + rng.standard_exponential() * scale * K / n


def cg_rule(ctx: AllocationContext, table: IndexTable) -> int:
    return select_arm(Policy("CG", table), ctx)


def policy_from_spec(spec: dict, T: int, priors: Sequence[tuple[int, int]]) -> Policy:
    """Build a Policy (computing or loading index tables) from its JSON form.

    Example: ``{"rule": "GI", "discount": 0.99, "truncation": 750}``.
    """
    if not isinstance(spec, dict) or "rule" not in spec:
        raise ConfigError("policy must be an object with a 'rule' field")
    allowed = {"rule", "discount", "truncation", "tolerance", "known_payoff", "solver",
               "ts_samples", "perturbation", "tie_break", "cg_schedule"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"unknown policy fields: {sorted(unknown)}")
    rule = str(spec["rule"]).upper()
    if rule not in RULES:
        raise ConfigError(f"unknown rule {spec['rule']!r}")
    index_keys = {"discount", "truncation", "tolerance", "known_payoff", "solver"}
    if rule not in _GITTINS_RULES + ("WI",) and index_keys & set(spec):
        raise ConfigError(f"{rule} takes no index parameters")
    max_prior = max(a + b for a, b in priors)
    table = None
    if rule in _GITTINS_RULES:
        cfg = IndexConfig(mode="gittins", discount=spec.get("discount", 0.99),
                          truncation_horizon=spec.get("truncation", 750),
                          tolerance=spec.get("tolerance", 1e-6),
                          known_payoff=spec.get("known_payoff", "truncated"),
                          solver=spec.get("solver", "newton"))
        table = cached_table(cfg, max_prior + T - 1)
    elif rule == "WI":
        if "known_payoff" in spec and spec["known_payoff"] != "truncated":
            raise ConfigError("WI only supports known_payoff='truncated'")
        cfg = IndexConfig(mode="whittle", discount=spec.get("discount", 1.0),
                          truncation_horizon=spec.get("truncation", T),
                          tolerance=spec.get("tolerance", 1e-6),
                          solver=spec.get("solver", "newton"))
        if cfg.truncation_horizon != T:
            raise ConfigError("WI truncation must equal the trial size")
        table = cached_table(cfg, max_prior + T - 1, range(1, T + 1), reach=max_prior)
    return Policy(rule, table,
                  ts_samples=spec.get("ts_samples", 1024),
                  perturbation=spec.get("perturbation", "rate"),
                  tie_break=spec.get("tie_break", "random"),
                  cg_schedule=spec.get("cg_schedule", "cycle"))
