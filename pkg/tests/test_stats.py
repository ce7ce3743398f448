import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats as sps

from junctionsde import fit_convergence_rate, ks_statistic
from junctionsde.stats import (folded_normal_cdf, mean_stderr, monotone_with_inversions,
                               reflected_bm_local_time_mean, reflected_bm_occupation_mean,
                               reflected_walk_local_time, z_score, zero_mean_report)


def test_mean_stderr_and_z():
    m, se, n = mean_stderr([1.0, 2.0, 3.0, 4.0])
    assert (m, n) == (2.5, 4) and se == pytest.approx(math.sqrt(5 / 3) / 2)
    assert z_score(1.0, 0.5) == 2.0
    assert z_score(1.0, 0.0, 1.0) == 0.0 and z_score(-1.0, 0.0) == -math.inf


@pytest.mark.parametrize("slope", [1.0, 2.0, 0.5, 0.0])
def test_rate_fit_recovers_power_laws(slope):
    scales = [0.08, 0.04, 0.02, 0.01]
    fit = fit_convergence_rate([(s, 3.0 * s ** slope) for s in scales])
    assert fit.slope == pytest.approx(slope, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.r2 == pytest.approx(1.0)


def test_rate_fit_errors():
    with pytest.raises(ValueError):
        fit_convergence_rate([(0.1, 1.0)])
    with pytest.raises(ValueError):
        fit_convergence_rate([(0.1, 1.0), (0.05, 0.0)])
    with pytest.raises(ValueError):
        fit_convergence_rate([(0.1, 1.0), (0.1, 0.5)])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=12))
def test_inversion_count_bounds(v):
    k = monotone_with_inversions(v)
    assert 0 <= k <= max(len(v) - 1, 0)
    assert monotone_with_inversions(sorted(v, reverse=True)) == 0
    assert monotone_with_inversions(v, decreasing=False) == monotone_with_inversions(v[::-1])


def test_zero_mean_report_shape_checks():
    with pytest.raises(ValueError):
        zero_mean_report(np.zeros((40, 2)), [0.5])
    with pytest.raises(ValueError):
        zero_mean_report(np.zeros((5, 1)), [0.5])
    rep = zero_mean_report(np.random.default_rng(0).standard_normal((400, 2)), [0.5, 1.0])
    assert rep.n == 400 and len(rep.rows) == 2


def test_ks_on_own_distribution_and_failure():
    rng = np.random.default_rng(3)
    x = np.abs(0.3 + rng.standard_normal(2000))
    res = ks_statistic(x, folded_normal_cdf(0.3, 1.0))
    assert res.passed and res.critical == pytest.approx(1.63 / math.sqrt(2000))
    assert not ks_statistic(np.zeros(500), folded_normal_cdf(0.3, 1.0)).passed
    with pytest.raises(ValueError):
        ks_statistic(x[:99], folded_normal_cdf(0.3, 1.0))


def test_folded_normal_cdf_against_scipy():
    z = np.linspace(0, 4, 17)
    ref = sps.foldnorm.cdf(z, 0.7 / math.sqrt(2.0), scale=math.sqrt(2.0))
    assert np.allclose(folded_normal_cdf(0.7, 2.0)(z), ref, atol=1e-12)
    assert folded_normal_cdf(0.7, 2.0)(-1.0) == 0.0


def test_local_time_mean_oracle():
    assert reflected_bm_local_time_mean(1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    assert reflected_bm_local_time_mean(4.0) == pytest.approx(2 * math.sqrt(2 / math.pi))
    # E|x0 + W_T| - x0 by direct integration (Tanaka)
    x0, T = 0.4, 1.5
    e_abs, _ = integrate.quad(lambda w: abs(x0 + w) * sps.norm.pdf(w, scale=math.sqrt(T)), -30, 30,
                              points=[-x0])
    assert reflected_bm_local_time_mean(T, x0) == pytest.approx(e_abs - x0, rel=1e-9)


def test_occupation_oracle_against_density_integral():
    # int_{-eps}^{eps} int_0^T p_s(x) ds dx, with the time integral in closed form
    eps = 0.05

    def time_integral(x):
        return 2 * math.sqrt(1 / (2 * math.pi)) * math.exp(-x * x / 2) - abs(x) * math.erfc(abs(x) / math.sqrt(2))

    ref, _ = integrate.quad(time_integral, -eps, eps, points=[0.0])
    assert reflected_bm_occupation_mean(1.0, eps) == pytest.approx(ref, rel=1e-8)
    assert reflected_bm_occupation_mean(1.0, eps) == pytest.approx(0.07732, abs=5e-5)
    # leading order 2 eps sqrt(2/pi)
    assert reflected_bm_occupation_mean(1.0, 1e-4) / 1e-4 == pytest.approx(2 * math.sqrt(2 / math.pi), rel=1e-3)


def test_reflected_walk_matches_oracle():
    m, se = reflected_walk_local_time(1.0, 2000, 4000, seed=5)
    assert abs(m - reflected_bm_local_time_mean(1.0)) < 4 * se + 0.01
