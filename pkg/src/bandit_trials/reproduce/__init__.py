"""Side-by-side reproduction of the reference index tables and trial simulations.

Reference values and their tolerances live in ``data/<target>.json``; this
module only runs the computations and compares.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from ..errors import ConfigError
from ..index.calibration import IndexConfig
from ..index.complexity import brute_force_count, complexity_csv, complexity_estimates
from ..index.tables import build_table, table_csv
from ..sim.experiment import run_experiment
from ..sim.io import bias_csv, results_csv
from ..sim.metrics import Metrics
from ..sim.scenario import Scenario

TARGETS = ("table1", "table2", "table3", "table4", "table5", "table6", "table7", "fig1", "fig4")


@dataclass
class Check:
    label: str
    value: float | None
    target: float | None
    low: float | None
    high: float | None
    status: str  # "pass", "fail" or "info"

    def describe(self) -> str:
        band = f"[{self.low:.4g}, {self.high:.4g}]" if self.low is not None else "-"
        val = "n/a" if self.value is None else f"{self.value:.4f}"
        ref = "-" if self.target is None else f"{self.target:.4f}"
        return f"{self.status.upper():5s} {self.label}: computed {val}, reference {ref}, accepted {band}"


@dataclass
class Report:
    target: str
    title: str
    lines: list[str] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    artifacts: dict[str, str] = field(default_factory=dict)
    results: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.status == "fail"]

    def render(self) -> str:
        out = [f"== {self.target}: {self.title}", *self.lines]
        if self.checks:
            out.append("")
            out.extend(c.describe() for c in self.checks)
            n_pass = sum(c.status == "pass" for c in self.checks)
            n_gate = sum(c.status != "info" for c in self.checks)
            out.append(f"{n_pass}/{n_gate} checked cells within tolerance"
                       + ("" if self.ok else f"; {len(self.failures())} outside"))
        return "\n".join(out)


def load_reference(target: str) -> dict:
    if target not in TARGETS:
        raise ConfigError(f"unknown target {target!r}; expected one of {', '.join(TARGETS)}")
    text = resources.files(__package__).joinpath("data", f"{target}.json").read_text()
    return json.loads(text)


def _band(value, target, low=None, high=None, tol=None, informational=False):
    if low is None:
        low, high = target - tol, target + tol
    if informational:
        status = "info"
    else:
        status = "pass" if value is not None and low <= value <= high else "fail"
    return low, high, status


# index tables -------------------------------------------------------------

def _reproduce_index(ref: dict) -> Report:
    cfg = IndexConfig(**ref["config"])
    remaining = ref.get("remaining")
    table = build_table(cfg, ref["max_n"], None if remaining is None else [remaining])
    grid = table.grid(remaining)
    rep = Report(ref["exhibit"], ref["title"])
    rep.lines.append(f"config: {cfg.to_dict()}" + ("" if remaining is None else f", remaining {remaining}"))
    rep.lines.append("computed (rows f, columns s):")
    rep.lines.extend(table.preview(remaining).splitlines())
    info = {(c["s"], c["f"]): c for c in ref.get("informational", [])}
    exact = ref.get("exact_posterior_mean", False)
    for f, row in enumerate(ref["values"], start=1):
        for s, target in enumerate(row, start=1):
            value = float(grid[s, f])
            cell = info.get((s, f))
            tol = cell["tolerance"] if cell else ref["tolerance"]
            low, high, status = _band(value, target, tol=tol, informational=cell is not None)
            label = f"(s={s}, f={f})" + (f" [{cell['reason']}]" if cell else "")
            rep.checks.append(Check(label, value, target, low, high, status))
            if exact:
                err = abs(value - s / (s + f))
                status = "pass" if err <= ref["exact_tolerance"] else "fail"
                rep.checks.append(Check(f"(s={s}, f={f}) equals {s}/{s + f}", value, s / (s + f),
                                        s / (s + f) - ref["exact_tolerance"],
                                        s / (s + f) + ref["exact_tolerance"], status))
    rep.artifacts[f"{ref['exhibit']}.csv"] = table_csv(table)
    rep.results["table"] = table
    return rep


# simulations --------------------------------------------------------------

_memo: dict[str, Metrics] = {}


def _scenario(ref: dict, row: dict, hyp: str, replications=None) -> Scenario:
    return Scenario(K=ref["K"], T=ref["T"], true_p=ref["hypotheses"][hyp], policy=row["policy"],
                    test=row["test"], replications=replications or ref["replications"],
                    seed=ref["seed"],
                    calibration_replications=replications or ref["calibration_replications"])


def experiment(scenario: Scenario, threads=None) -> Metrics:
    """``run_experiment`` memoized per process on the scenario's JSON."""
    key = json.dumps(scenario.to_dict(), sort_keys=True)
    if key not in _memo:
        _memo[key] = run_experiment(scenario, threads=threads)
    return _memo[key]


def _metric(m: Metrics, name: str):
    if name.startswith("mean_n_"):
        return m.mean_n[int(name.rsplit("_", 1)[1])]
    return getattr(m, name)


def _fmt_cell(value, ref, digits):
    v = "  n/a " if value is None else f"{value:.{digits}f}"
    return f"{v} ({ref:.{digits}f})" if ref is not None else v


def _reproduce_simulation(ref: dict, rows=None, threads=None, replications=None) -> Report:
    rep = Report(ref["exhibit"], ref["title"])
    selected = [r for r in ref["rows"] if rows is None or r["label"] in rows]
    pairs = []
    metrics = {}
    for row in selected:
        for hyp in ("H0", "H1"):
            sc = _scenario(ref, row, hyp, replications)
            m = experiment(sc, threads)
            metrics[row["label"], hyp] = m
            pairs.append((sc, m))
    rep.results["metrics"] = metrics
    R = replications or ref["replications"]
    rep.lines.append(f"K = {ref['K']}, T = {ref['T']}, {R} replications per hypothesis, seed {ref['seed']}; "
                     "cells show computed (reference); spreads are across-trial SDs")
    head = (f"{'rule':14s}{'test':28s}{'alpha':>16s}{'p*':>16s}{'ENS':>18s}"
            f"{'power':>16s}{'p*':>16s}{'p* SD':>16s}{'ENS':>18s}{'ENS SD':>16s}")
    rep.lines.append(head)
    for row in selected:
        m0, m1 = metrics[row["label"], "H0"], metrics[row["label"], "H1"]
        p0, p1 = row["reference"]["H0"], row["reference"]["H1"]
        test = row["test"]["kind"] + ("" if "target_alpha" not in row["test"]
                                      else f" {row['test']['target_alpha']}")
        rep.lines.append(
            f"{row['label']:14s}{test:28s}"
            f"{_fmt_cell(m0.rejection_rate, p0['rejection_rate'], 3):>16s}"
            f"{_fmt_cell(m0.p_star, p0['p_star'], 3):>16s}"
            f"{_fmt_cell(m0.ens, p0['ens'], 2):>18s}"
            f"{_fmt_cell(m1.rejection_rate, p1['rejection_rate'], 3):>16s}"
            f"{_fmt_cell(m1.p_star, p1['p_star'], 3):>16s}"
            f"{_fmt_cell(m1.p_star_sd, p1['p_star_sd'], 2):>16s}"
            f"{_fmt_cell(m1.ens, p1['ens'], 2):>18s}"
            f"{_fmt_cell(m1.ens_sd, p1['ens_sd'], 2):>16s}")
    rep.lines.append("")
    rep.lines.append("under H1: mean allocation, mean MLE per arm, wrong choice "
                     "(majority / abandoned; reference in parentheses)")
    for row in selected:
        m1 = metrics[row["label"], "H1"]
        extra = row.get("reference_extra", {})
        alloc = ", ".join(f"{x:.2f}" for x in m1.mean_n)
        mle = ", ".join(f"{x:.4f}" for x in m1.mle_mean)
        ref_alloc = ""
        if "mean_n_0" in extra:
            ref_alloc = f" ({extra['mean_n_0']:.2f}, {extra['mean_n_1']:.2f})"
        ref_mle = f" ({', '.join(f'{x:.4f}' for x in extra['mle_mean'])})" if "mle_mean" in extra else ""
        wc = "n/a" if m1.wrong_choice is None else \
            f"{m1.wrong_choice:.4f} / {m1.wrong_choice_abandoned:.4f}"
        ref_wc = f" ({extra['wrong_choice']:.4f})" if "wrong_choice" in extra else ""
        thr = "" if m1.threshold is None else f"  threshold {m1.threshold:.4g}"
        rep.lines.append(f"  {row['label']:14s} n = [{alloc}]{ref_alloc}  MLE = [{mle}]{ref_mle}"
                         f"  wrong = {wc}{ref_wc}{thr}")

    labels = {r["label"] for r in selected}
    for chk in ref["checks"]:
        if chk["row"] not in labels:
            continue
        value = _metric(metrics[chk["row"], chk["hypothesis"]], chk["metric"])
        low, high, status = _band(value, chk["target"], chk.get("low"), chk.get("high"),
                                  chk.get("tolerance"))
        rep.checks.append(Check(f"{chk['row']} {chk['hypothesis']} {chk['metric']}",
                                value, chk["target"], low, high, status))
    for hyp, ub in ref["upper_bound"].items():
        sc = _scenario(ref, ref["rows"][0], hyp)
        exact = sc.upper_bound_exact == Fraction(str(ub))
        rep.checks.append(Check(f"upper bound {hyp} = T * max p", sc.upper_bound, ub, ub, ub,
                                "pass" if exact else "fail"))
    rep.artifacts[f"{ref['exhibit']}_results.csv"] = "".join(
        results_csv([p for p in pairs if p[0].hypothesis == hyp])
        for hyp in ("H0", "H1"))
    rep.artifacts[f"{ref['exhibit']}_bias.csv"] = bias_csv(pairs)
    return rep


# figures ------------------------------------------------------------------

def _reproduce_fig1(ref: dict) -> Report:
    rep = Report("fig1", ref["title"])
    K = ref["arms"]
    horizons = range(ref["horizons"]["start"], ref["horizons"]["stop"] + 1)
    text = complexity_csv(horizons, K)
    rep.artifacts["fig1.csv"] = text
    rep.lines.append(f"K = {K}; counts for T = {horizons.start}..{horizons.stop - 1} in fig1.csv")
    rep.lines.append(f"{'T':>5s} {'brute force':>24s} {'DP':>16s} {'index':>8s}")
    for T in (7, 10, 20, 50, 100, 150):
        if T in horizons:
            c = complexity_estimates(T, K)
            rep.lines.append(f"{T:5d} {brute_force_count(T, K):24.3e} {c.brute_dp_count:16d} "
                             f"{c.index_count:8d}")
    for spot in ref["spot_checks"]:
        c = complexity_estimates(spot["T"], spot["K"])
        ok = (c.brute_dp_count, c.index_count) == (spot["dp"], spot["index"])
        rep.checks.append(Check(f"T={spot['T']}, K={spot['K']} (DP, index) = "
                                f"({spot['dp']}, {spot['index']})", float(c.brute_dp_count),
                                float(spot["dp"]), spot["dp"], spot["dp"], "pass" if ok else "fail"))
    return rep


def _reproduce_fig4(ref: dict, threads=None, replications=None) -> Report:
    base = load_reference(ref["base"])
    rep = Report("fig4", ref["title"])
    pairs = []
    rows = {r["label"]: r for r in base["rows"]}
    curves = {}
    for rule in ref["rules"]:
        row = dict(rows[rule])
        sc = _scenario(base, row, ref["hypothesis"], replications)
        m = experiment(sc, threads)
        pairs.append((sc, m))
        curves[rule] = m.bias
    rep.results["bias"] = curves
    rep.artifacts["fig4_bias.csv"] = bias_csv(pairs)
    rep.lines.append(f"bias of s_k/n_k - p_k by final n_k (bins of {ref['bin_width']}); "
                     "full curves in fig4_bias.csv")
    for rule, bins in curves.items():
        for arm in (0, 1):
            pts = [b for b in bins if b.arm == arm and b.count >= 100]
            desc = "  ".join(f"{b.bin_lo}-{b.bin_hi}:{b.bias:+.3f}" for b in pts[:8])
            rep.lines.append(f"  {rule:4s} arm {arm}: {desc}")
    for chk in ref["checks"]:
        bins = [b for b in curves[chk["rule"]] if b.arm == chk["arm"]]
        if chk["metric"] == "sign":
            sel = [b for b in bins if b.bin_hi <= chk["max_bin_hi"]]
            total = sum(b.count for b in sel)
            value = sum(b.bias * b.count for b in sel) / total if total else None
            ok = value is not None and value < 0
            rep.checks.append(Check(f"{chk['rule']} arm {chk['arm']} bias for n <= {chk['max_bin_hi']} "
                                    "is negative", value, None, None, None, "pass" if ok else "fail"))
        else:
            p = base["hypotheses"][ref["hypothesis"]][chk["arm"]]
            worst = None
            for b in bins:
                if b.count < chk["min_count"]:
                    continue
                # binomial spread of the estimate at the bin's smallest n
                se = math.sqrt(p * (1 - p) / b.bin_lo / b.count)
                worst = max(worst or 0.0, abs(b.bias) / se)
            rep.checks.append(Check(f"{chk['rule']} arm {chk['arm']} bias within "
                                    f"{chk['sigmas']} s.e. of 0 (largest |z|)", worst, 0.0, 0.0,
                                    float(chk["sigmas"]),
                                    "pass" if worst is not None and worst <= chk["sigmas"]
                                    else "fail"))
    return rep


def reproduce(target: str, threads: int | None = None, replications: int | None = None,
              rows=None) -> Report:
    """Run one target; ``rows`` restricts simulation tables to the named rules."""
    ref = load_reference(target)
    kind = ref["kind"]
    if kind == "index":
        return _reproduce_index(ref)
    if kind == "simulation":
        return _reproduce_simulation(ref, rows, threads, replications)
    if kind == "complexity":
        return _reproduce_fig1(ref)
    return _reproduce_fig4(ref, threads, replications)
