"""CSV output for experiment results, with a provenance comment header."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable

from .. import __version__
from ..rng import SCHEME
from .metrics import Metrics
from .scenario import Scenario

WRONG_CHOICE_DEFINITION = "best arm does not receive strictly more patients than every other arm"


def scenario_hash(scenario: Scenario) -> str:
    blob = json.dumps(scenario.to_dict(), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance_lines(scenarios: Iterable[Scenario], extra: dict | None = None) -> list[str]:
    scenarios = list(scenarios)
    lines = [f"# tool: bandit_trials {__version__}",
             f"# rng: {SCHEME}"]
    for sc in scenarios:
        lines.append(f"# scenario: rule={sc.rule} hypothesis={sc.hypothesis} seed={sc.seed} "
                     f"config_hash={scenario_hash(sc)} test={sc.test.describe()}")
    lines.append(f"# z statistic: pooled two-proportion; wrong_choice: {WRONG_CHOICE_DEFINITION}")
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {value}")
    return lines


def _fmt(x, digits=6):
    return "" if x is None else f"{x:.{digits}f}"


def results_columns(K: int) -> list[str]:
    return (["rule", "alpha_or_power", "se", "p_star", "p_star_se", "ens", "ens_se", "regret",
             "wrong_choice"] + [f"mean_n_{k}" for k in range(K)])


def results_row(m: Metrics) -> list[str]:
    return ([m.rule, _fmt(m.rejection_rate), _fmt(m.rejection_se), _fmt(m.p_star),
             _fmt(m.p_star_se), _fmt(m.ens), _fmt(m.ens_se), _fmt(m.regret),
             _fmt(m.wrong_choice)] + [_fmt(x) for x in m.mean_n])


def results_csv(pairs: list[tuple[Scenario, Metrics]], extra: dict | None = None) -> str:
    """One row per (scenario, hypothesis); all scenarios must share K."""
    K = {sc.K for sc, _ in pairs}
    if len(K) != 1:
        raise ValueError("all rows of a results file need the same number of arms")
    buf = io.StringIO()
    for line in provenance_lines([sc for sc, _ in pairs], extra):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(results_columns(K.pop()))
    for _, m in pairs:
        w.writerow(results_row(m))
    return buf.getvalue()


def bias_csv(pairs: list[tuple[Scenario, Metrics]], extra: dict | None = None) -> str:
    buf = io.StringIO()
    for line in provenance_lines([sc for sc, _ in pairs], extra):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    multi = len(pairs) > 1
    w.writerow((["rule", "hypothesis"] if multi else []) + ["arm", "bin_lo", "bin_hi", "count", "bias"])
    for sc, m in pairs:
        for b in m.bias:
            lead = [sc.rule, sc.hypothesis] if multi else []
            w.writerow(lead + [b.arm, b.bin_lo, b.bin_hi, b.count, _fmt(b.bias)])
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def read_results(path) -> list[dict]:
    """Rows of a results CSV as dicts, skipping the comment header."""
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
