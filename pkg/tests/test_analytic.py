import math

import numpy as np
import pytest
from scipy import integrate, special

import tricklesim.analytic as ana
from tricklesim.analytic import (AnalyticParams, cdf_t1, cdf_table,
                                 density_table, expected_transmissions,
                                 expected_transmissions_asymptotic,
                                 gaussian_cut, hazard, joint_density,
                                 marginal_density, moment,
                                 multicell_estimate,
                                 multicell_estimate_asymptotic, norm_constant,
                                 stationarity_residual, sum_density)
from tricklesim.exceptions import NumericError, ParameterError

REL_EXACT = 1e-12
REL_QUAD = 1e-8
REL_MOMENT = 1e-5
NORM_TOL = 1e-6
STATIONARY_TOL = 1e-6

# norm constants frozen from an independent finite-sum evaluation
C_2_50_0 = 5.641895835477563      # sqrt(100/pi)
C_2_50_HALF = 1.5991520304932134
C_3_50_HALF = 5.059046487406388
C_3_BIG_HALF = 7.999716414236819  # n=1e10, approaches 1/(eta^2/2!) = 8
EN_3_50_HALF = 4.692203144408287
EN_ASY_3_50_HALF = 4.4960230352214


def test_params_validation():
    AnalyticParams(1, 1)
    AnalyticParams(4, 50, 0.9)
    p = AnalyticParams(2, 50.0, 0.5)
    assert isinstance(p.n, int)
    with pytest.raises(ParameterError):
        AnalyticParams(0, 50)
    with pytest.raises(ParameterError):
        AnalyticParams(1, 0)
    with pytest.raises(ParameterError):
        AnalyticParams(1, 50.5)
    with pytest.raises(ParameterError):
        AnalyticParams(1, 50, 1.0)
    with pytest.raises(ParameterError):
        AnalyticParams(1, 50, -0.1)


def test_norm_constant_frozen_values():
    assert norm_constant(AnalyticParams(2, 50, 0.0)) == pytest.approx(
        C_2_50_0, rel=REL_EXACT)
    assert norm_constant(AnalyticParams(2, 50, 0.0)) == pytest.approx(
        math.sqrt(100.0 / math.pi), rel=REL_EXACT)
    assert norm_constant(AnalyticParams(2, 50, 0.5)) == pytest.approx(
        C_2_50_HALF, rel=REL_EXACT)
    assert norm_constant(AnalyticParams(3, 50, 0.5)) == pytest.approx(
        C_3_50_HALF, rel=REL_EXACT)
    assert norm_constant(AnalyticParams(3, 10_000_000_000, 0.5)) == pytest.approx(
        C_3_BIG_HALF, rel=REL_EXACT)
    # k=2, eta=1/2 closed form: 1 / (eta + sqrt(pi (1-eta) / (2 n)))
    assert C_2_50_HALF == pytest.approx(
        1.0 / (0.5 + math.sqrt(math.pi * 0.5 / 100.0)), rel=REL_EXACT)


def test_norm_constant_eta0_closed_form():
    for k in (1, 2, 3, 5):
        for n in (10, 50, 1000):
            expect = (math.pi ** -0.5 * (2.0 * n) ** ((k - 1) / 2.0)
                      * math.exp(special.gammaln(k / 2.0)))
            got = norm_constant(AnalyticParams(k, n, 0.0))
            assert got == pytest.approx(expect, rel=1e-10)


def test_norm_constant_sum_vs_integral():
    for k in (2, 3, 6, 10):
        for eta in (0.0, 0.1, 0.5):
            p = AnalyticParams(k, 50, eta)
            s = norm_constant(p, method="sum")
            i = norm_constant(p, method="integral")
            assert abs(s - i) / s < REL_QUAD
    with pytest.raises(ParameterError):
        norm_constant(AnalyticParams(2, 50, 0.0), method="guess")


def test_norm_constant_increases_toward_big_n_limit():
    # at eta>0 the constant approaches (k-1)! / eta^(k-1) from below
    limit = 8.0
    prev = 0.0
    for n in (10, 100, 10_000, 10_000_000):
        c = norm_constant(AnalyticParams(3, n, 0.5))
        assert prev < c < limit
        prev = c


def test_hazard_values():
    p = AnalyticParams(2, 50, 0.5)
    assert hazard(0.4, 0.2, p) == pytest.approx(10.0, rel=REL_EXACT)
    assert hazard(0.2, 0.2, p) == 0.0
    assert hazard(0.0, 0.0, p) == 0.0
    p0 = AnalyticParams(1, 50, 0.0)
    assert hazard(0.3, 0.0, p0) == pytest.approx(15.0, rel=REL_EXACT)


def test_cdf_t1_matches_closed_form():
    p = AnalyticParams(1, 50, 0.0)
    # F(t) = 1 - exp(-n t^2 / 2) at eta=0
    assert cdf_t1(0.2, p) == pytest.approx(1.0 - math.exp(-1.0), rel=REL_EXACT)
    assert cdf_t1(0.0, p) == 0.0
    p5 = AnalyticParams(1, 50, 0.5)
    assert cdf_t1(0.5, p5) == 0.0  # listen-only window has no mass
    t = np.array([0.0, 0.5, 0.6, 10.0])
    vals = cdf_t1(t, p5)
    assert vals[0] == vals[1] == 0.0
    assert vals[2] == pytest.approx(1.0 - math.exp(-25.0 * 0.01 / 0.5), rel=REL_EXACT)
    assert vals[3] == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        cdf_t1(0.2, AnalyticParams(2, 50, 0.0))


def test_joint_density_plateau_and_gaussian():
    p = AnalyticParams(3, 50, 0.5)
    c = norm_constant(p)
    # total age below eta: flat at the norm constant
    assert joint_density(np.array([0.2, 0.2]), p) == pytest.approx(c, rel=REL_EXACT)
    # above eta: gaussian falloff in the excess
    expect = c * math.exp(-0.5 * 50.0 * 0.1 ** 2 / 0.5)
    assert joint_density(np.array([0.3, 0.3]), p) == pytest.approx(expect, rel=REL_EXACT)
    with pytest.raises(ParameterError):
        joint_density(np.array([0.1]), p)
    with pytest.raises(ParameterError):
        joint_density(np.array([0.1, -0.2]), p)


def test_joint_density_mc_normalization():
    # (k-1)-dim integral of the joint age density must be 1; importance
    # sample with iid Exp(1/2) coordinates
    rng = np.random.default_rng(12345)
    m = 400_000
    scale = 2.0
    for k, eta in [(3, 0.5), (4, 0.0)]:
        p = AnalyticParams(k, 50, eta)
        x = rng.exponential(scale, size=(m, k - 1))
        w = np.exp(x.sum(axis=1) / scale) * scale ** (k - 1)
        vals = np.array([joint_density(row, p) for row in x]) * w
        est = vals.mean()
        sigma = vals.std(ddof=1) / math.sqrt(m)
        assert abs(est - 1.0) < 3.0 * sigma


def test_sum_density_normalizes():
    for k, eta in [(2, 0.0), (2, 0.5), (4, 0.5), (6, 0.1)]:
        p = AnalyticParams(k, 50, eta)
        hi = eta + gaussian_cut(50, eta)
        total, err = integrate.quad(lambda s: sum_density(s, p), 0.0, hi,
                                    epsabs=1e-12, epsrel=1e-10, limit=200,
                                    points=[eta])
        assert abs(total - 1.0) < REL_QUAD


def test_sum_density_values():
    p = AnalyticParams(2, 50, 0.5)
    c = norm_constant(p)
    assert sum_density(0.0, p) == pytest.approx(c, rel=REL_EXACT)
    assert sum_density(0.3, p) == pytest.approx(c, rel=REL_EXACT)
    assert sum_density(0.6, p) == pytest.approx(
        c * math.exp(-50.0 * 0.01 / 1.0), rel=REL_EXACT)
    p3 = AnalyticParams(3, 50, 0.5)
    c3 = norm_constant(p3)
    assert sum_density(0.0, p3) == 0.0
    assert sum_density(0.4, p3) == pytest.approx(c3 * 0.4, rel=REL_EXACT)


def test_marginal_k2_matches_closed_form():
    # integrating out the age of a k=2 node gives back the plateau-gaussian
    for eta in (0.0, 0.5):
        p = AnalyticParams(2, 50, eta)
        c = norm_constant(p)
        for t in (0.0, 0.1, eta, eta + 0.05, eta + 0.2):
            expect = c if t < eta else c * math.exp(
                -0.5 * 50.0 * (t - eta) ** 2 / (1.0 - eta))
            assert marginal_density(t, p) == pytest.approx(expect, rel=1e-8)


def test_marginal_k1_closed_form():
    p = AnalyticParams(1, 50, 0.5)
    t = 0.6
    expect = (50.0 * 0.1 / 0.5) * math.exp(-50.0 * 0.01 / 1.0)
    assert marginal_density(t, p) == pytest.approx(expect, rel=REL_EXACT)
    assert marginal_density(0.4, p) == 0.0


def test_marginal_normalization_quad():
    for k, eta in [(1, 0.0), (2, 0.5), (3, 0.5), (6, 0.0)]:
        p = AnalyticParams(k, 50, eta)
        hi = eta + gaussian_cut(50, eta)
        total, err = integrate.quad(lambda t: marginal_density(t, p), 0.0, hi,
                                    epsabs=1e-12, epsrel=1e-9, limit=200,
                                    points=[eta])
        assert abs(total - 1.0) < NORM_TOL


def test_moments_match_quadrature():
    for k, eta in [(1, 0.0), (2, 0.5), (3, 0.0), (6, 0.5)]:
        p = AnalyticParams(k, 50, eta)
        hi = eta + gaussian_cut(50, eta) * (1.0 + math.sqrt(k)) + 0.02
        ts = np.linspace(0.0, hi, 4001)
        dens = np.array([marginal_density(t, p) for t in ts])
        for j in (1, 2, 3):
            via_quad = integrate.simpson(dens * ts ** j, x=ts)
            assert abs(moment(j, p) - via_quad) / via_quad < REL_MOMENT


def test_moment_frozen_value():
    p = AnalyticParams(1, 50, 0.0)
    assert moment(1, p) == pytest.approx(math.sqrt(math.pi) / 10.0, rel=REL_EXACT)
    assert moment(0, p) == pytest.approx(1.0, rel=REL_EXACT)
    with pytest.raises(ParameterError):
        moment(-1, p)


def test_expected_transmissions():
    assert expected_transmissions(AnalyticParams(1, 50, 0.0)) == pytest.approx(
        C_2_50_0, rel=REL_EXACT)
    assert expected_transmissions(AnalyticParams(3, 50, 0.5)) == pytest.approx(
        EN_3_50_HALF, rel=REL_EXACT)
    assert expected_transmissions_asymptotic(AnalyticParams(3, 50, 0.5)) == pytest.approx(
        EN_ASY_3_50_HALF, rel=1e-10)
    # mean transmissions per interval = mean interval rate: E[N] = C_{k+1}/C_k
    p = AnalyticParams(4, 200, 0.1)
    ratio = norm_constant(p.bump_k(1)) / norm_constant(p)
    assert expected_transmissions(p) == pytest.approx(ratio, rel=1e-10)


def test_expected_transmissions_asymptotic_eta0():
    # k=1, eta=0: asymptotic form coincides with the exact constant
    p = AnalyticParams(1, 50, 0.0)
    assert expected_transmissions_asymptotic(p) == pytest.approx(
        expected_transmissions(p), rel=1e-10)


def test_mean_gap_times_rate_is_one_interval():
    # E[T] * E[N] = 1: k-th gap mean times transmissions per unit time
    for k, eta in [(1, 0.0), (2, 0.5), (4, 0.1)]:
        p = AnalyticParams(k, 400, eta)
        assert moment(1, p) * expected_transmissions(p) == pytest.approx(
            1.0, rel=1e-10)


def test_multicell_estimate():
    # side^2/S(R) single cells of size S(R)
    est = multicell_estimate(3, 30, 4.0, 0.5)
    p = AnalyticParams(3, 49, 0.5)
    assert est == pytest.approx(900.0 / 49.0 * expected_transmissions(p), rel=1e-12)
    # radius too small for any neighbor: every node broadcasts once
    assert multicell_estimate(1, 30, 0.5, 0.0) == 900.0
    asy = multicell_estimate_asymptotic(3, 30, 4.0, 0.5)
    assert asy == pytest.approx(900.0 * 3.0 / (math.pi * 16.0 * 0.5), rel=1e-12)
    with pytest.raises(ParameterError):
        multicell_estimate_asymptotic(3, 30, 0.0, 0.5)


def test_stationarity_residual_small_and_detects_perturbation():
    for eta in (0.0, 0.5):
        for n in (50, 500):
            p = AnalyticParams(2, n, eta)
            assert stationarity_residual(p) < STATIONARY_TOL
            assert stationarity_residual(p, perturb=1.5) > 1e-2
    assert stationarity_residual(AnalyticParams(4, 100, 0.3)) < STATIONARY_TOL
    with pytest.raises(ParameterError):
        stationarity_residual(AnalyticParams(1, 50, 0.0))


def test_lemma2_identity():
    # (k+1)-fold integral of F(sum) collapses to int x^k F(x) / k!;
    # for F = exp(-x) both sides are exactly 1
    val2, _ = integrate.dblquad(
        lambda y, x: math.exp(-(x + y)), 0, 30, 0, 30)
    assert abs(val2 - 1.0) < 1e-8
    val3, _ = integrate.tplquad(
        lambda z, y, x: math.exp(-(x + y + z)), 0, 25, 0, 25, 0, 25)
    assert abs(val3 - 1.0) < 1e-7
    rng = np.random.default_rng(12345)
    m = 400_000
    x = rng.exponential(2.0, size=(m, 4))
    w = np.exp(x.sum(axis=1) / 2.0 - x.sum(axis=1)) * 2.0 ** 4
    est, sigma = w.mean(), w.std(ddof=1) / math.sqrt(m)
    assert abs(est - 1.0) < 3.0 * sigma


def test_lemma3_identity():
    # double integral of s^j t^k F(s+t) equals j! k! for F = exp(-z)
    for j in (0, 1, 2):
        for k in (0, 1, 2):
            val, _ = integrate.dblquad(
                lambda t, s: s ** j * t ** k * math.exp(-(s + t)),
                0, 40, 0, 40)
            expect = math.factorial(j) * math.factorial(k)
            assert abs(val - expect) / expect < 1e-8


def test_density_table_shapes_and_mass():
    p = AnalyticParams(3, 50, 0.5)
    tab = density_table(p)
    assert tab.kind == "pdf"
    assert tab.abscissae[0] == 0.0
    assert abs(tab.trapezoid_mass() - 1.0) < 1e-5
    ctab = cdf_table(p)
    assert ctab.kind == "cdf"
    assert np.all(np.diff(ctab.values) >= -1e-12)
    assert ctab.values[-1] == pytest.approx(1.0, abs=1e-5)
    # k=1 cdf table is exact
    c1 = cdf_table(AnalyticParams(1, 50, 0.0))
    assert np.allclose(c1.values, cdf_t1(c1.abscissae, AnalyticParams(1, 50, 0.0)))


def test_density_table_custom_grid_and_interp():
    p = AnalyticParams(2, 50, 0.0)
    tab = density_table(p, grid=np.linspace(0.0, 0.5, 501))
    f = tab.interpolator()
    assert f(-1.0) == 0.0 and f(9.0) == 0.0
    mid = f(0.1234)
    assert mid == pytest.approx(marginal_density(0.1234, p), rel=1e-4)
    with pytest.raises(ParameterError):
        ana.DensityTable(np.array([0.0, 0.0, 1.0]), np.zeros(3), "pdf")
    with pytest.raises(ParameterError):
        ana.DensityTable(np.array([0.0, 1.0]), np.zeros(2), "histogram")


def test_quad_failure_raises_numeric_error():
    bad = lambda x: math.sin(1.0 / max(x, 1e-300)) / max(x, 1e-300)
    with pytest.raises(NumericError) as exc_info:
        ana._quad(bad, 0.0, 1.0, what="oscillatory stress case")
    diag = exc_info.value.diagnostics
    assert "lower" in diag and "upper" in diag
