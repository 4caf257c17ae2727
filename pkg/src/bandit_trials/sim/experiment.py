"""Monte Carlo experiments over many seeded replications.

Replication ``r`` always draws from ``Streams.for_replication(seed, r, ns)``,
so results do not depend on how replications are spread over worker
processes: chunks are gathered in replication order before aggregation.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple

import numpy as np

from ..errors import ConfigError
from ..rng import CALIBRATION, EVALUATION, Streams
from .metrics import Metrics, bias_curves
from .scenario import Scenario
from .stats import fisher_exact_pvalue, threshold_from_pvalues, z_statistic
from .trial import build_policy, play

THREADS_ENV = "BANDIT_TRIALS_THREADS"


class Replicates(NamedTuple):
    """Per-replication results, rows in replication order.

    ``stat[:, k - 1]`` is arm k's z-statistic (z-cutoff test) or one-sided
    Fisher p-value (Fisher tests) against the control.  ``last_best`` is the
    last patient index given the best arm (-1 if none).
    """

    n: np.ndarray
    s: np.ndarray
    stat: np.ndarray
    last_best: np.ndarray
    allocations: np.ndarray | None


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return 1


_worker: dict = {}


def _init_worker(scenario: Scenario, namespace: int, keep: bool):
    policy = build_policy(scenario)
    max_prior = max(a + b for a, b in scenario.priors)
    _worker.update(scenario=scenario, namespace=namespace, keep=keep,
                   choose=policy.chooser(scenario.T, scenario.K, max_prior))


def _run_chunk(bounds):
    sc: Scenario = _worker["scenario"]
    choose, ns, keep = _worker["choose"], _worker["namespace"], _worker["keep"]
    start, stop = bounds
    R, K, T = stop - start, sc.K, sc.T
    fisher = sc.test.kind != "z-cutoff"
    best = sc.best_arm
    n = np.zeros((R, K), dtype=np.int64)
    s = np.zeros((R, K), dtype=np.int64)
    stat = np.zeros((R, max(K - 1, 0)))
    last_best = np.full(R, -1, dtype=np.int64)
    allocs = np.zeros((R, T), dtype=np.int8) if keep else None
    for i, r in enumerate(range(start, stop)):
        streams = Streams.for_replication(sc.seed, r, ns)
        alloc, out = play(choose, T, sc.true_p, sc.priors, streams)
        for a, y in zip(alloc, out):
            n[i, a] += 1
            s[i, a] += y
        for k in range(1, K):
            if fisher:
                stat[i, k - 1] = fisher_exact_pvalue(s[i, k], n[i, k], s[i, 0], n[i, 0])
            else:
                stat[i, k - 1] = z_statistic(s[i, k], n[i, k], s[i, 0], n[i, 0])
        for t in range(T - 1, -1, -1):
            if alloc[t] == best:
                last_best[i] = t
                break
        if keep:
            allocs[i] = alloc
    return n, s, stat, last_best, allocs


def _chunks(R: int, threads: int):
    pieces = max(1, min(R, threads * 8))
    edges = [round(i * R / pieces) for i in range(pieces + 1)]
    return [(a, b) for a, b in zip(edges, edges[1:]) if b > a]


def simulate(scenario: Scenario, replications: int | None = None, namespace: int = EVALUATION,
             threads: int | None = None, keep_allocations: bool = False) -> Replicates:
    """Run the scenario's replications and collect raw per-trial results."""
    R = scenario.replications if replications is None else replications
    threads = default_threads() if threads is None else threads
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    # build index tables once, before any worker starts
    build_policy(scenario)
    chunks = _chunks(R, threads)
    if threads == 1 or len(chunks) == 1:
        _init_worker(scenario, namespace, keep_allocations)
        parts = [_run_chunk(c) for c in chunks]
    else:
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(threads, mp_context=ctx, initializer=_init_worker,
                                 initargs=(scenario, namespace, keep_allocations)) as pool:
            parts = list(pool.map(_run_chunk, chunks))
    n, s, stat, last, allocs = zip(*parts)
    return Replicates(np.concatenate(n), np.concatenate(s), np.concatenate(stat),
                      np.concatenate(last), np.concatenate(allocs) if keep_allocations else None)


def scaled_pvalues(stat: np.ndarray, K: int) -> np.ndarray:
    """Bonferroni-scaled p-values, capped at 1."""
    return np.minimum(1.0, stat * max(K - 1, 1))


def calibrate_cutoff(scenario: Scenario, threads: int | None = None) -> tuple[float, float]:
    """Threshold on Bonferroni-scaled Fisher p-values giving size <= target_alpha under H0.

    Runs ``calibration_replications`` trials of the null version of the
    scenario on the calibration seed namespace and returns
    (threshold, achieved calibration size).
    """
    if scenario.test.kind == "z-cutoff":
        raise ConfigError("calibration applies to Fisher tests")
    null = scenario.null()
    target = scenario.test.target_alpha
    if target <= 0.0:
        return 0.0, 0.0
    reps = simulate(null, null.calibration_replications, CALIBRATION, threads)
    if reps.stat.shape[1] == 0:
        raise ConfigError("calibration needs at least one experimental arm")
    minp = scaled_pvalues(reps.stat, scenario.K).min(axis=1)
    c = threshold_from_pvalues(minp, target)
    return c, float(np.mean(minp <= c))


def rejections(scenario: Scenario, stat: np.ndarray, threshold: float | None = None) -> np.ndarray:
    """(R, K-1) boolean array: arm k rejected against the control."""
    test = scenario.test
    if test.kind == "z-cutoff":
        return stat > test.cutoff
    p = scaled_pvalues(stat, scenario.K)
    if test.kind == "fisher":
        return p < test.alpha
    return p <= threshold


def trial_rejects(scenario: Scenario, rej: np.ndarray) -> np.ndarray:
    """Per-replication verdict: rejection of a truly effective arm, or any arm under H0."""
    p = scenario.true_p
    if scenario.test.power == "best-only":
        best = scenario.best_arm
        return rej[:, best - 1] if best > 0 else np.zeros(rej.shape[0], bool)
    effective = [k - 1 for k in range(1, scenario.K) if p[k] > p[0]]
    cols = effective if effective else list(range(scenario.K - 1))
    return rej[:, cols].any(axis=1) if cols else np.zeros(rej.shape[0], bool)


def _mean_se(x):
    m = float(x.mean())
    if x.size < 2:
        return m, 0.0, None
    sd = float(x.std(ddof=1))
    return m, sd, sd / math.sqrt(x.size)


def summarize(scenario: Scenario, reps: Replicates, threshold: float | None = None,
              calibration_size: float | None = None, bias_bin_width: int = 5) -> Metrics:
    R, K, T = reps.n.shape[0], scenario.K, scenario.T
    rej = trial_rejects(scenario, rejections(scenario, reps.stat, threshold)).astype(float)
    rate = float(rej.mean())
    rate_se = math.sqrt(rate * (1 - rate) / R) if R > 1 else None
    p_star, p_sd, p_se = _mean_se(reps.n[:, scenario.best_arm] / T)
    ens, ens_sd, ens_se = _mean_se(reps.s.sum(axis=1).astype(float))

    mle_mean, mle_var, n_zero = [], [], []
    for k in range(K):
        used = reps.n[:, k] > 0
        n_zero.append(int((~used).sum()))
        est = reps.s[used, k] / reps.n[used, k]
        mle_mean.append(float(est.mean()) if est.size else math.nan)
        mle_var.append(float(est.var(ddof=1)) if est.size > 1 else math.nan)

    wrong = abandoned = None
    if scenario.unique_best:
        best = scenario.best_arm
        others = np.delete(reps.n, best, axis=1)
        wrong = float(np.mean(reps.n[:, best] <= others.max(axis=1))) if K > 1 else 0.0
        window = math.ceil(T / K)
        abandoned = float(np.mean(reps.last_best < T - window))

    bins, _ = bias_curves((reps.n, reps.s), scenario.true_p, bias_bin_width)
    return Metrics(
        rule=scenario.rule, hypothesis=scenario.hypothesis, replications=R,
        test=scenario.test.describe(), rejection_rate=rate, rejection_se=rate_se,
        p_star=p_star, p_star_sd=p_sd, p_star_se=p_se,
        ens=ens, ens_sd=ens_sd, ens_se=ens_se,
        regret=scenario.upper_bound - ens, upper_bound=scenario.upper_bound,
        mean_n=tuple(float(x) for x in reps.n.mean(axis=0)),
        mle_mean=tuple(mle_mean), mle_var=tuple(mle_var), n_zero=tuple(n_zero),
        wrong_choice=wrong, wrong_choice_abandoned=abandoned,
        threshold=threshold, calibration_size=calibration_size, bias=bins,
    )


def run_experiment(scenario: Scenario, threads: int | None = None,
                   bias_bin_width: int = 5) -> Metrics:
    """Simulate, test and summarize a scenario (calibrating the test first if needed)."""
    threshold = size = None
    if scenario.test.kind == "fisher-adjusted":
        threshold, size = calibrate_cutoff(scenario, threads)
    reps = simulate(scenario, threads=threads)
    return summarize(scenario, reps, threshold, size, bias_bin_width)
