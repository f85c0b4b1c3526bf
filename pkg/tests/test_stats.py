import math

import numpy as np
import pytest

from tricklesim.analytic import multicell_estimate
from tricklesim.core import TrickleConfig
from tricklesim.engine import TransmissionLog, run_simulation
from tricklesim.exceptions import ParameterError
from tricklesim.stats import (SUMMARY_HEADER, SummaryStats, empirical_cdf,
                              exp1_cdf, inter_transmission_times, ks_distance,
                              mean_tx_per_interval,
                              poisson_convergence_check, summarize_log,
                              summary_row, theta_ratio)
from tricklesim.topology import single_cell

EXP_KS_TOL = 0.025


def _log(times, horizon=10.0, k=1):
    times = np.asarray(times, dtype=float)
    kinds = []
    all_times, nodes = [], []
    for t in times:
        all_times += [t, t]
        nodes += [0, 0]
        kinds += ["attempt", "broadcast"]
    return TransmissionLog(times=np.array(all_times), node_ids=np.array(nodes),
                           kinds=kinds, horizon=horizon,
                           config=TrickleConfig(k=k),
                           topology_info={"kind": "single_cell", "n_nodes": 1},
                           seed=0)


def test_inter_transmission_times():
    log = _log([0.2, 1.2, 1.5, 2.0])
    gaps = inter_transmission_times(log, warmup=1.0)
    assert np.allclose(gaps, [0.3, 0.5])
    with pytest.raises(ParameterError):
        inter_transmission_times(log, warmup=-1.0)
    with pytest.warns(UserWarning):
        empty = inter_transmission_times(_log([0.5, 1.2]), warmup=1.0)
    assert empty.size == 0


def test_mean_tx_per_interval():
    log = _log(np.linspace(1.05, 10.95, 30), horizon=11.0)
    assert mean_tx_per_interval(log, tau_h=1.0, warmup=1.0) == pytest.approx(3.0)
    with pytest.raises(ParameterError):
        mean_tx_per_interval(_log([0.5], horizon=1.5), tau_h=1.0, warmup=1.0)


def test_summarize_log():
    log = _log([0.2, 1.2, 1.5, 2.0], horizon=3.0)
    s = summarize_log(log, warmup=1.0)
    assert isinstance(s, SummaryStats)
    assert s.sample_count == 2
    assert s.mean_tx_per_interval == pytest.approx(3.0 / 2.0)
    assert s.inter_tx_moments[0] == pytest.approx(0.4)
    assert s.ks_to_reference is None
    with pytest.raises(ParameterError):
        SummaryStats(1.0, [float("nan")], 2, 1.0)


def test_empirical_cdf_steps_and_ties():
    cdf = empirical_cdf([3.0, 1.0, 2.0])
    f = cdf.interpolator()
    assert f(2.0) == pytest.approx(2.0 / 3.0)
    assert f(0.5) == 0.0
    assert f(99.0) == 1.0
    tied = empirical_cdf([1.0, 1.0, 2.0])
    assert np.allclose(tied.abscissae, [1.0, 2.0])
    assert np.allclose(tied.values, [2.0 / 3.0, 1.0])
    with pytest.raises(ParameterError):
        empirical_cdf([])


def test_ks_distance_disjoint_supports():
    emp = empirical_cdf([10.0, 11.0, 12.0])
    ref = lambda x: np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    assert ks_distance(emp, ref) == pytest.approx(1.0)


def test_ks_distance_against_itself_is_small():
    samples = np.linspace(0.001, 5.0, 2000)
    emp = empirical_cdf(samples)
    # step function vs its own generating curve: off by at most one step
    assert ks_distance(emp, lambda x: np.asarray(x) / 5.0) <= 1.0 / 2000 + 1e-12


def test_ks_distance_exponential_draws():
    rng = np.random.default_rng(2024)
    emp = empirical_cdf(rng.exponential(size=10_000))
    assert ks_distance(emp, exp1_cdf) < EXP_KS_TOL


def test_ks_distance_monotone_rescale_invariance():
    # KS is invariant under a strictly increasing change of variable
    rng = np.random.default_rng(7)
    x = rng.exponential(size=500)
    d1 = ks_distance(empirical_cdf(x), exp1_cdf)
    d2 = ks_distance(empirical_cdf(x ** 2), lambda y: exp1_cdf(np.sqrt(y)))
    assert d1 == pytest.approx(d2, abs=1e-12)
    with pytest.raises(ParameterError):
        ks_distance(empirical_cdf(x).__class__(
            np.array([0.0, 1.0]), np.array([0.1, 0.2]), "pdf"), exp1_cdf)


def test_summary_row_format():
    row = summary_row(2, 50, None, 0.5, 1.25, 1.0, ks=0.01, samples=10)
    assert len(row) == len(SUMMARY_HEADER)
    assert row[2] == ""
    assert row[6] == "1.25"
    no_ks = summary_row(2, 50, 4.0, 0.0, 1.0, 1.0)
    assert no_ks[2] == "4" and no_ks[7] == ""


def test_poisson_convergence_check_shrinks():
    out = poisson_convergence_check([10, 200], horizon=60.0, seeds=range(3))
    assert set(out) == {10, 200}
    assert all(len(v) == 3 for v in out.values())
    assert np.median(out[200]) < np.median(out[10])


def test_theta_ratio():
    est = multicell_estimate(2, 30, 4.0, 0.0)
    assert theta_ratio(est, 2, 30, 4.0, 0.0) == pytest.approx(1.0)
    assert theta_ratio(2.0 * est, 2, 30, 4.0, 0.0) == pytest.approx(2.0)


def test_gap_mean_matches_rate_identity():
    # pooled gap mean ~ tau_h / (broadcasts per interval) on a real log
    cfg = TrickleConfig(k=2, eta=0.5)
    log = run_simulation(cfg, single_cell(30), 60.0, 1)
    gaps = inter_transmission_times(log, warmup=1.0)
    rate = mean_tx_per_interval(log, 1.0, 1.0)
    assert gaps.mean() * rate == pytest.approx(1.0, rel=0.02)
