import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from estimators.risk_formulas import var_es_ngarch
from evaluation.backtest import (backtest_forecasts, christoffersen_cc, es_bootstrap_test, exceedance_residuals,
                                 kupiec_uc, region_errors, rmse, v_measure, violations)
from helpers.errors import (AlignmentError, DegenerateResiduals, DomainError, EmptyResiduals, InsufficientData,
                            NotApplicable)


def test_violations_are_strict_exceedances():
    v = violations([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])
    assert_array_equal(v.indicators, [0, 0, 1])
    assert (v.x, v.n) == (1, 3)
    with pytest.raises(AlignmentError):
        violations([1.0, 2.0], [1.0])


def test_kupiec_no_violations():
    lr, p = kupiec_uc(0, 250, 0.01)
    assert lr == pytest.approx(5.02517, abs=1e-5)
    assert p == pytest.approx(0.024982, abs=1e-5)


def test_kupiec_exact_coverage_and_domain():
    assert kupiec_uc(5, 100, 0.05) == pytest.approx((0.0, 1.0))
    lr, p = kupiec_uc(100, 100, 0.05)
    assert np.isfinite(lr) and p < 1e-10
    with pytest.raises(DomainError):
        kupiec_uc(5, 4, 0.05)


def test_conditional_coverage_adds_independence_part():
    clustered = np.zeros(200, dtype=int)
    clustered[100:110] = 1
    v = violations(clustered.astype(float), np.full(200, 0.5))
    lr_uc, _ = kupiec_uc(v.x, v.n, 0.05)
    lr_cc, p_cc = christoffersen_cc(v, 0.05)
    assert lr_cc > lr_uc + 20
    assert p_cc < 1e-6
    with pytest.raises(InsufficientData):
        christoffersen_cc(violations([1.0], [0.0]), 0.05)


def test_spread_violations_have_no_independence_penalty():
    hits = np.zeros(100)
    hits[::20] = 1.0
    v = violations(hits, np.full(100, 0.5))
    lr_uc, _ = kupiec_uc(v.x, v.n, 0.05)
    lr_cc, _ = christoffersen_cc(v, 0.05)
    assert lr_cc >= lr_uc
    assert lr_cc - lr_uc < 1.0


def test_exceedance_residual_hand_case():
    r = exceedance_residuals([3.0, 1.0], [1.0, 2.0], [2.0, 5.0], [0.5, 1.0])
    assert_allclose(r, [2.0])
    assert_allclose(exceedance_residuals([3.0, 1.0], [1.0, 2.0], [2.0, 5.0]), [1.0])
    with pytest.raises(EmptyResiduals):
        exceedance_residuals([0.0, 1.0], [1.0, 2.0], [2.0, 5.0])


def test_v_measure_hand_case():
    assert v_measure([3.0, 0.0], [2.0, 1.0], [2.5, 1.5]) == pytest.approx((0.5, 1.0, -0.5))
    with pytest.raises(NotApplicable):
        v_measure([0.0], [1.0], [2.0])


def test_bootstrap_detects_understated_es(rng):
    p = es_bootstrap_test(1.0 + rng.normal(scale=0.1, size=40), B=500, seed=1)
    assert p == pytest.approx(1 / 501)


def test_bootstrap_accepts_overstated_es(rng):
    assert es_bootstrap_test(-0.5 + rng.normal(size=40), B=500, seed=1) > 0.5


def test_bootstrap_is_reproducible_and_bounded(rng):
    r = rng.normal(size=25)
    p = es_bootstrap_test(r, B=300, seed=5, stream=(1, 2, 3))
    assert p == es_bootstrap_test(r, B=300, seed=5, stream=(1, 2, 3))
    assert 1 / 301 <= p <= 1.0
    with pytest.raises(InsufficientData):
        es_bootstrap_test([1.0, 2.0], B=300)
    with pytest.raises(DegenerateResiduals):
        es_bootstrap_test([1.0, 1.0, 1.0], B=300)


def test_rmse_and_regions():
    truth = np.arange(10.0)
    assert rmse(truth + 2.0, truth) == pytest.approx(2.0)
    summary = region_errors(truth + 1.0, truth, regions=5)
    assert_array_equal(summary.counts, [2, 2, 2, 2, 2])
    assert_allclose(summary.bias, np.ones(5))
    assert_allclose(summary.variance, np.zeros(5))
    assert_allclose(summary.lower, [0, 2, 4, 6, 8])
    assert_allclose(summary.upper, [1, 3, 5, 7, 9])
    with pytest.raises(InsufficientData):
        region_errors(truth[:3], truth[:3], regions=5)
    with pytest.raises(DomainError):
        region_errors(truth, truth, regions=1)


def test_backtest_of_correct_normal_forecasts(rng):
    n = 1000
    losses = rng.normal(size=n)
    var, es = var_es_ngarch(1.0, 0.05)
    report = backtest_forecasts("nGARCH", 0.05, losses, np.full(n, var), es=np.full(n, es),
                                sigma=np.ones(n), true_var=np.full(n, var), true_es=np.full(n, es), B=500, seed=2)
    assert report.n == n
    assert report.violation_prop == pytest.approx(report.x / n)
    assert 25 <= report.x <= 80
    assert report.uc_p > 0.001 and report.cc_p > 0.001
    assert 0 < report.es_boot_p <= 1
    assert report.v1 == pytest.approx(es - var)
    assert report.rmse_var == 0.0 and report.rmse_es == 0.0
    assert set(report.rejected()) == {"uc", "cc", "es_boot"}


def test_backtest_without_violations_notes_skipped_tests():
    report = backtest_forecasts("LLQAR", 0.05, np.zeros(50), np.ones(50), es=np.full(50, 2.0), B=200)
    assert report.x == 0
    assert np.isnan(report.es_boot_p) and np.isnan(report.v)
    assert len(report.notes) == 2
    assert report.rejected()["es_boot"] is False


def test_no_violations_add_no_independence_evidence():
    v = violations(np.zeros(100), np.ones(100))
    assert christoffersen_cc(v, 0.05)[0] == pytest.approx(kupiec_uc(0, 100, 0.05)[0])


def test_alternating_violations_are_rejected():
    hits = np.tile([0.0, 1.0], 100)
    _, p = christoffersen_cc(violations(hits, np.full(200, 0.5)), 0.05)
    assert p < 0.01


def test_chi_square_p_values_match_incomplete_gamma():
    from scipy import special

    lr, p = kupiec_uc(7, 250, 0.01)
    assert p == pytest.approx(special.gammaincc(0.5, lr / 2.0), rel=1e-8)
    hits = np.zeros(200)
    hits[[10, 11, 50, 120, 121, 122]] = 1.0
    lr_cc, p_cc = christoffersen_cc(violations(hits, np.full(200, 0.5)), 0.05)
    assert p_cc == pytest.approx(np.exp(-lr_cc / 2.0), rel=1e-8)


def test_uc_size_under_the_null():
    rng = np.random.default_rng(123)
    hits = rng.random((1000, 250)) < 0.05
    rejections = sum(kupiec_uc(int(h.sum()), 250, 0.05)[1] < 0.05 for h in hits)
    assert 20 <= rejections <= 80


def test_bootstrap_is_scale_free(rng):
    r = 0.2 + rng.normal(size=30)
    p = es_bootstrap_test(r, B=400, seed=9)
    assert es_bootstrap_test(3.0 * r, B=400, seed=9) == pytest.approx(p, abs=2 / 401)


def test_region_boundary_ties_go_to_lower_bin():
    truth = np.array([1.0, 1.0, 1.0, 1.0, 2.0, 3.0])
    forecast = truth + np.array([0.1, 0.1, 0.1, 0.1, 0.5, 0.5])
    summary = region_errors(forecast, truth, regions=2)
    assert_array_equal(summary.counts, [4, 2])
    assert_allclose(summary.lower, [1.0, 2.0])
    assert_allclose(summary.upper, [1.0, 3.0])
    assert_allclose(summary.bias, [0.1, 0.5])

    flat = region_errors(np.zeros(6), np.ones(6), regions=3)
    assert_array_equal(flat.counts, [6, 0, 0])
    assert np.isnan(flat.bias[1]) and np.isnan(flat.variance[2])


def test_bootstrap_needs_enough_resamples(rng):
    with pytest.raises(DomainError):
        es_bootstrap_test(rng.normal(size=30), B=50)
