import math

import numpy as np
import pytest

from bandit_trials.errors import ConfigError
from bandit_trials.rng import CALIBRATION
from bandit_trials.sim import Scenario, calibrate_cutoff, run_experiment, run_trial, simulate
from bandit_trials.sim.experiment import default_threads, scaled_pvalues
from bandit_trials.sim.io import bias_csv, provenance_lines, read_results, results_csv


def sc(rule="FR", p=(0.3, 0.5), T=40, R=200, test=None, **policy):
    return Scenario(K=len(p), T=T, true_p=p, policy={"rule": rule, **policy},
                    test=test or {"kind": "z-cutoff", "cutoff": 1.645}, replications=R, seed=42,
                    calibration_replications=R)


def test_trial_invariants():
    for rule in ("FR", "CB", "TS", "UCB", "RBI", "RGI", "GI", "WI", "CG"):
        rec = run_trial(sc(rule, (0.2, 0.4, 0.6), T=30, ts_samples=64))
        assert rec.n.sum() == 30 and np.all(rec.s <= rec.n)
        assert rec.allocations.shape == (30,)


def test_trial_reproducible():
    a = run_trial(sc("TS", ts_samples=32))
    b = run_trial(sc("TS", ts_samples=32))
    assert np.array_equal(a.allocations, b.allocations) and np.array_equal(a.outcomes, b.outcomes)


def test_outcomes_independent_of_rule():
    # patient t's response uniform is shared, so an always-success arm agrees
    a = run_trial(sc("FR", (1.0, 1.0)))
    b = run_trial(sc("CB", (1.0, 1.0)))
    assert a.outcomes.all() and b.outcomes.all()


def test_fr_allocation_is_multinomial():
    reps = simulate(sc("FR", (0.3, 0.3, 0.3), T=60, R=2000))
    mean = reps.n.mean(axis=0)
    se = math.sqrt(60 * (1 / 3) * (2 / 3) / 2000)
    assert np.all(np.abs(mean - 20) < 3 * se)


def test_thread_count_does_not_change_results():
    s = sc("RBI", T=30, R=50)
    a, b = simulate(s, threads=1), simulate(s, threads=3)
    for x, y in zip(a[:4], b[:4]):
        assert np.array_equal(x, y)


def test_default_threads(monkeypatch):
    monkeypatch.delenv("BANDIT_TRIALS_THREADS", raising=False)
    assert default_threads() == 1
    monkeypatch.setenv("BANDIT_TRIALS_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("BANDIT_TRIALS_THREADS", "zero")
    with pytest.raises(ConfigError):
        default_threads()


def test_calibration_controls_size():
    s = sc("CB", (0.3, 0.3), T=40, R=400, test={"kind": "fisher-adjusted", "target_alpha": 0.05})
    c, size = calibrate_cutoff(s)
    assert size <= 0.05
    m = run_experiment(s)
    assert m.threshold == c and m.rejection_rate < 0.1
    with pytest.raises(ConfigError):
        calibrate_cutoff(sc())


def test_calibration_uses_its_own_namespace():
    s = sc("FR", (0.3, 0.3), R=50)
    a = simulate(s, namespace=CALIBRATION)
    b = simulate(s)
    assert not np.array_equal(a.n, b.n)


def test_metrics_fields():
    m = run_experiment(sc("FR", R=300))
    assert m.upper_bound == pytest.approx(20.0)
    assert m.regret == pytest.approx(20.0 - m.ens)
    assert sum(m.mean_n) == pytest.approx(40)
    assert 0 <= m.rejection_rate <= 1 and m.wrong_choice is not None
    assert m.rejection_se == pytest.approx(math.sqrt(m.rejection_rate * (1 - m.rejection_rate) / 300))


def test_scaled_pvalues():
    assert np.array_equal(scaled_pvalues(np.array([[0.01, 0.5]]), 3), np.array([[0.02, 1.0]]))


def test_results_csv(tmp_path):
    s = sc("FR", R=50)
    m = run_experiment(s)
    text = results_csv([(s, m)])
    assert text.startswith("# tool: bandit_trials")
    assert "seed=42" in text and "PCG64" in text
    path = tmp_path / "r.csv"
    path.write_text(text)
    row = read_results(path)[0]
    assert row["rule"] == "FR" and float(row["mean_n_0"]) + float(row["mean_n_1"]) == pytest.approx(40)
    assert bias_csv([(s, m)]).splitlines()[len(provenance_lines([s]))] == "arm,bin_lo,bin_hi,count,bias"
    s3 = sc("FR", (0.3, 0.3, 0.5), R=10)
    with pytest.raises(ValueError):
        results_csv([(s, m), (s3, run_experiment(s3))])


def test_fr_fisher_calibration_is_conservative():
    s = sc("FR", (0.3, 0.3), T=60, R=1000, test={"kind": "fisher-adjusted", "target_alpha": 0.05})
    c, size = calibrate_cutoff(s)
    assert size <= 0.05
    # the exact test is conservative, so calibration can only loosen the nominal cutoff
    minp = scaled_pvalues(simulate(s.null(), 1000, CALIBRATION).stat, 2).min(axis=1)
    assert np.mean(minp < 0.05) <= 0.05 and c >= minp[minp < 0.05].max()
    m = run_experiment(s)
    assert m.rejection_rate <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / 1000)


def test_cg_control_gets_exactly_ceil_t_over_k():
    reps = simulate(sc("CG", (0.3, 0.4, 0.5), T=31, R=20))
    assert np.all(reps.n[:, 0] == math.ceil(31 / 3))
