"""Seeded trial simulation, hypothesis tests and operating characteristics."""

from .experiment import calibrate_cutoff, run_experiment, simulate, summarize
from .metrics import BiasBin, Metrics, bias_curves, compute_regret, wrong_choice_rate
from .scenario import Scenario, TestSpec
from .stats import fisher_exact_pvalue, threshold_from_pvalues, z_statistic, z_test
from .trial import TrialRecord, run_trial

__all__ = [
    "calibrate_cutoff", "run_experiment", "simulate", "summarize", "BiasBin", "Metrics",
    "bias_curves", "compute_regret", "wrong_choice_rate", "Scenario", "TestSpec",
    "fisher_exact_pvalue", "threshold_from_pvalues", "z_statistic", "z_test", "TrialRecord",
    "run_trial",
]
