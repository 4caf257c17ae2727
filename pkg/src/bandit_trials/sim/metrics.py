"""Operating characteristics aggregated over replications."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class BiasBin(NamedTuple):
    arm: int
    bin_lo: int
    bin_hi: int
    count: int
    bias: float


@dataclass(frozen=True)
class Metrics:
    """Summary of one scenario.

    ``*_sd`` are spreads across replications, ``*_se`` Monte Carlo standard
    errors of the mean (None for a single replication).  ``mle_mean`` and
    ``mle_var`` describe s_k / n_k over replications with n_k > 0;
    ``n_zero[k]`` counts replications that never used arm k.
    """

    rule: str
    hypothesis: str
    replications: int
    test: str
    rejection_rate: float
    rejection_se: float | None
    p_star: float
    p_star_sd: float
    p_star_se: float | None
    ens: float
    ens_sd: float
    ens_se: float | None
    regret: float
    upper_bound: float
    mean_n: tuple[float, ...]
    mle_mean: tuple[float, ...]
    mle_var: tuple[float, ...]
    n_zero: tuple[int, ...]
    wrong_choice: float | None
    wrong_choice_abandoned: float | None
    threshold: float | None = None
    calibration_size: float | None = None
    bias: tuple[BiasBin, ...] = field(default=(), repr=False)


def _se(x: np.ndarray) -> float | None:
    if x.size < 2:
        return None
    return float(x.std(ddof=1) / math.sqrt(x.size))


def _sd(x: np.ndarray) -> float:
    return float(x.std(ddof=1)) if x.size > 1 else 0.0


def compute_regret(ens: float, true_p: Sequence[float], T: int) -> float:
    return T * max(true_p) - ens


def _counts(records):
    """(n, s) arrays of shape (R, K) from TrialRecords or from an (n, s) pair."""
    if isinstance(records, tuple) and len(records) == 2 and isinstance(records[0], np.ndarray):
        return records
    n = np.array([r.n for r in records], dtype=np.int64)
    s = np.array([r.s for r in records], dtype=np.int64)
    return n, s


def bias_curves(records, true_p: Sequence[float], bin_width: int = 5):
    """Per arm, mean of s_k/n_k - p_k grouped by final n_k in bins of ``bin_width``.

    Bins are ``[1, w], [w + 1, 2w], ...``; returns (bins, excluded) where
    ``excluded[k]`` counts replications with n_k = 0.
    """
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    n, s = _counts(records)
    bins = []
    excluded = []
    for k in range(n.shape[1]):
        nk, sk = n[:, k], s[:, k]
        used = nk > 0
        excluded.append(int((~used).sum()))
        idx = (nk[used] - 1) // bin_width
        err = sk[used] / nk[used] - true_p[k]
        for b in np.unique(idx):
            sel = idx == b
            bins.append(BiasBin(k, int(b * bin_width + 1), int((b + 1) * bin_width),
                                int(sel.sum()), float(err[sel].mean())))
    return tuple(bins), tuple(excluded)


def wrong_choice_rate(records, true_p: Sequence[float], definition: str = "majority",
                      window: int | None = None, allocations=None) -> float:
    """Fraction of trials that fail to favour the unique best arm.

    ``majority``: the best arm does not receive strictly more patients than
    every other arm.  ``abandoned``: the best arm gets none of the last
    ``window`` patients (default ``ceil(T / K)``); needs per-patient
    allocations, taken from the records or passed as an (R, T) array.
    """
    top = max(true_p)
    best = [k for k, v in enumerate(true_p) if v == top]
    if len(best) != 1:
        raise ValueError("wrong choice needs a unique best arm")
    best = best[0]
    if definition == "majority":
        n, _ = _counts(records)
        others = np.delete(n, best, axis=1)
        if others.shape[1] == 0:
            return 0.0
        return float(np.mean(n[:, best] <= others.max(axis=1)))
    if definition == "abandoned":
        if allocations is None:
            allocations = np.array([r.allocations for r in records])
        alloc = np.asarray(allocations)
        T = alloc.shape[1]
        w = window or math.ceil(T / len(true_p))
        return float(np.mean(~(alloc[:, T - w:] == best).any(axis=1)))
    raise ValueError(f"unknown wrong-choice definition {definition!r}")
