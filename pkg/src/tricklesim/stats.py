"""Estimators over transmission logs and agreement metrics against analytics.

The estimand throughout is the cell's pooled broadcast point process: gaps
are measured between consecutive successful broadcasts anywhere in the
cell, matching the quantity the closed forms describe.  KS distances are
reported raw, without p-values: the gap samples form a Markov chain, so
textbook significance levels would not apply anyway.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import analytic
from .analytic import DensityTable
from .core import TrickleConfig
from .engine import TransmissionLog, attempt_times, run_simulation
from .exceptions import ParameterError
from .serialize import fmt
from .topology import single_cell

__all__ = [
    "SummaryStats",
    "SUMMARY_HEADER",
    "inter_transmission_times",
    "mean_tx_per_interval",
    "summarize_log",
    "empirical_cdf",
    "ks_distance",
    "exp1_cdf",
    "poisson_convergence_check",
    "theta_ratio",
    "summary_row",
]

SUMMARY_HEADER = ["k", "n_or_side", "R", "eta", "sim_mean", "analytic_mean",
                  "ratio", "ks", "samples", "seed_count"]


@dataclass
class SummaryStats:
    """Per-configuration estimates extracted from one or more logs."""

    mean_tx_per_interval: float
    inter_tx_moments: list
    sample_count: int
    warmup: float
    ks_to_reference: float | None = None

    def __post_init__(self):
        if self.sample_count < 0:
            raise ParameterError("sample_count must be >= 0")
        if not all(math.isfinite(m) for m in self.inter_tx_moments):
            raise ParameterError("moments must be finite")


def summary_row(k, n_or_side, radius, eta, sim_mean, analytic_mean,
                ks=None, samples=0, seed_count=1) -> list:
    """One CSV row in the summary schema; ratio is sim over analytic."""
    ratio = sim_mean / analytic_mean if analytic_mean else float("nan")
    return [str(k), str(n_or_side),
            "" if radius is None else fmt(radius),
            fmt(eta), fmt(sim_mean), fmt(analytic_mean), fmt(ratio),
            "" if ks is None else fmt(ks),
            str(samples), str(seed_count)]


def inter_transmission_times(log: TransmissionLog, warmup: float) -> np.ndarray:
    """Gaps between consecutive post-warmup broadcasts, pooled over the cell."""
    if warmup < 0:
        raise ParameterError(f"warmup must be >= 0, got {warmup!r}")
    bt = log.broadcast_times()
    bt = bt[bt >= warmup]
    if len(bt) < 2:
        warnings.warn("fewer than 2 broadcasts after warmup; no gaps to report",
                      stacklevel=2)
        return np.array([], dtype=float)
    return np.diff(bt)


def mean_tx_per_interval(log: TransmissionLog, tau_h: float, warmup: float) -> float:
    """Post-warmup broadcast count per interval of length tau_h."""
    if log.horizon <= warmup + tau_h:
        raise ParameterError(
            f"horizon {log.horizon!r} must exceed warmup {warmup!r} + tau_h {tau_h!r}")
    count = int(np.sum(log.broadcast_times() >= warmup))
    return count / ((log.horizon - warmup) / tau_h)


def summarize_log(log: TransmissionLog, warmup: float = 1.0,
                  ks: float | None = None) -> SummaryStats:
    gaps = inter_transmission_times(log, warmup) if len(log.times) else np.array([])
    moments = [float(np.mean(gaps ** j)) if len(gaps) else 0.0 for j in (1, 2, 3)]
    return SummaryStats(
        mean_tx_per_interval=mean_tx_per_interval(log, log.config.tau_h, warmup),
        inter_tx_moments=moments,
        sample_count=int(len(gaps)),
        warmup=warmup,
        ks_to_reference=ks,
    )


def empirical_cdf(samples) -> DensityTable:
    """Right-continuous step CDF at the sorted sample points."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ParameterError("empirical CDF needs at least one sample")
    xs, counts = np.unique(samples, return_counts=True)
    return DensityTable(xs, np.cumsum(counts) / samples.size, "cdf",
                        {"source": "empirical", "samples": int(samples.size)})


def exp1_cdf(x):
    return 1.0 - np.exp(-np.asarray(x, dtype=float))


def ks_distance(empirical: DensityTable, reference) -> float:
    """Sup-norm gap at the empirical jump points, both one-sided limits.

    ``reference`` is a CDF callable or a cdf-kind DensityTable.
    """
    if empirical.kind != "cdf":
        raise ParameterError("first argument must be a cdf table")
    ref = reference.interpolator() if isinstance(reference, DensityTable) else reference
    x = empirical.abscissae
    upper = empirical.values
    lower = np.concatenate([[0.0], upper[:-1]])
    fx = np.asarray(ref(x), dtype=float)
    return float(max(np.max(upper - fx), np.max(fx - lower)))


def poisson_convergence_check(n_list, horizon: float = 100.0, seeds=range(10),
                              eta: float = 0.0, warmup: float = 1.0,
                              k: int = 1) -> dict:
    """Per-seed KS of n-dilated attempt interarrivals against Exp(1).

    The cell's pooled attempt process has rate n, so stretching time by n
    should look like a unit-rate Poisson process for large n; the returned
    {n: [KS per seed]} map lets callers check the distance shrinks with n.
    """
    config = TrickleConfig(k=k, tau_l=1.0, tau_h=1.0, eta=eta)
    out = {}
    for n in n_list:
        topo = single_cell(int(n))
        distances = []
        for seed in seeds:
            log = run_simulation(config, topo, horizon, int(seed))
            at = attempt_times(log)
            at = at[at >= warmup]
            gaps = np.diff(at) * n
            distances.append(ks_distance(empirical_cdf(gaps), exp1_cdf))
        out[int(n)] = distances
    return out


def theta_ratio(sim_mean: float, k: int, side: int, radius: float, eta: float,
                include_self: bool = True) -> float:
    """Simulated grid broadcast rate over the independent-cells estimate."""
    estimate = analytic.multicell_estimate(k, side, radius, eta,
                                           include_self=include_self)
    if estimate == 0.0:
        raise ParameterError("multicell estimate is zero; ratio undefined")
    return sim_mean / estimate
