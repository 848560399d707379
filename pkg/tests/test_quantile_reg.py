import numpy as np
import pytest
from numpy.testing import assert_allclose

from estimators.quantile_reg import (check_loss, qar1_fit, qar1_forecast, qar1_var_es, qr_objective,
                                     repair_across_levels, sublevels, weighted_linear_qr,
                                     quantile_curve_var_es, weighted_qr_or_intercept)
from helpers.errors import DegenerateWeights, DomainError, InsufficientData, SingularDesign


def test_check_loss_values():
    assert check_loss(-2.0, 0.05) == pytest.approx(1.9)
    assert check_loss(2.0, 0.05) == pytest.approx(0.1)
    assert check_loss(0.0, 0.3) == 0.0
    assert_allclose(check_loss(np.array([-1.0, 1.0]), 0.5), [0.5, 0.5])


def test_exact_line_is_recovered():
    x = np.arange(10.0)
    X = np.column_stack([np.ones(10), x])
    fit = weighted_linear_qr(X, 2.0 + 3.0 * x, None, 0.5)
    assert_allclose(fit.beta, [2.0, 3.0], atol=1e-8)
    assert fit.objective == pytest.approx(0.0, abs=1e-8)
    assert fit.predict([1.0, 20.0]) == pytest.approx(62.0)


def test_intercept_only_is_lower_quantile():
    y = np.arange(1.0, 11.0)
    fit = weighted_linear_qr(np.ones((10, 1)), y, None, 0.5)
    assert fit.beta[0] == pytest.approx(5.0)
    weights = np.ones(10)
    weights[-1] = 20.0
    assert weighted_linear_qr(np.ones((10, 1)), y, weights, 0.5).beta[0] == pytest.approx(10.0)


def test_solution_minimizes_weighted_check_loss(rng):
    n = 200
    X = np.column_stack([np.ones(n), rng.normal(size=n), rng.normal(size=n)])
    y = X @ [0.5, 1.0, -2.0] + rng.standard_t(4, n)
    w = rng.uniform(0.1, 2.0, n)
    fit = weighted_linear_qr(X, y, w, 0.9)
    best = qr_objective(X, y, w, 0.9, fit.beta)
    assert fit.objective == pytest.approx(best)
    for _ in range(50):
        trial = fit.beta + rng.normal(scale=0.05, size=3)
        assert qr_objective(X, y, w, 0.9, trial) >= best - 1e-9
    ols = np.linalg.lstsq(X, y, rcond=None)[0]
    assert qr_objective(X, y, w, 0.9, ols) >= best


def test_quantile_fraction_below_fit(rng):
    n = 400
    x = rng.normal(size=n)
    X = np.column_stack([np.ones(n), x])
    y = 1.0 + 0.5 * x + rng.normal(size=n)
    fit = weighted_linear_qr(X, y, None, 0.95)
    below = np.mean(y <= X @ fit.beta)
    assert 0.93 <= below <= 0.97


def test_input_checks():
    X = np.column_stack([np.ones(10), np.arange(10.0)])
    with pytest.raises(DomainError):
        weighted_linear_qr(X, np.arange(10.0), None, 1.0)
    with pytest.raises(DomainError):
        weighted_linear_qr(X, np.arange(9.0), None, 0.5)
    with pytest.raises(DomainError):
        weighted_linear_qr(X, np.arange(10.0), -np.ones(10), 0.5)
    with pytest.raises(InsufficientData):
        weighted_linear_qr(X[:6], np.arange(6.0), None, 0.5)
    with pytest.raises(DegenerateWeights):
        weighted_linear_qr(X, np.arange(10.0), np.zeros(10), 0.5)


def test_singular_design_and_intercept_fallback():
    X = np.column_stack([np.ones(10), np.full(10, 3.0)])
    y = np.arange(1.0, 11.0)
    with pytest.raises(SingularDesign):
        weighted_linear_qr(X, y, None, 0.5)
    fit = weighted_qr_or_intercept(X, y, None, 0.5)
    assert_allclose(fit.beta, [5.0, 0.0])


def test_sublevels_are_midpoints():
    assert_allclose(sublevels(0.05, 5), [0.005, 0.015, 0.025, 0.035, 0.045])


def test_repair_across_levels():
    repaired = repair_across_levels({0.05: (2.0, 3.0), 0.01: (1.5, 4.0)})
    assert repaired[0.05] == (2.0, 3.0)
    assert repaired[0.01] == (2.0, 4.0)


def test_qar1(rng):
    x = np.zeros(300)
    for t in range(1, 300):
        x[t] = 0.5 * x[t - 1] + rng.normal()
    fit = qar1_fit(x, 0.05)
    assert fit.tau == pytest.approx(0.95)
    assert fit.beta[1] == pytest.approx(0.5, abs=0.25)
    assert qar1_forecast(x, 0.05) == pytest.approx(fit.beta[0] + fit.beta[1] * x[-1])
    var, es = qar1_var_es(x, 0.05, 20)
    assert var == pytest.approx(qar1_forecast(x, 0.05))
    assert es >= var
    with pytest.raises(InsufficientData):
        qar1_fit(x[:20], 0.05)


def _basic_solution_objective(X, y, w, tau):
    """Smallest objective over fits that interpolate every pair of rows."""
    best = np.inf
    n = len(y)
    for i in range(n):
        for j in range(i + 1, n):
            A = X[[i, j]]
            if abs(np.linalg.det(A)) < 1e-12:
                continue
            beta = np.linalg.solve(A, y[[i, j]])
            best = min(best, qr_objective(X, y, w, tau, beta))
    return best


def test_matches_exhaustive_basic_solutions():
    rng = np.random.default_rng(77)
    for _ in range(50):
        n = int(rng.integers(7, 13))
        X = np.column_stack([np.ones(n), rng.normal(size=n)])
        y = rng.standard_t(3, n)
        w = rng.uniform(0.0, 2.0, n)
        tau = float(rng.uniform(0.05, 0.95))
        fit = weighted_linear_qr(X, y, w, tau)
        oracle = _basic_solution_objective(X, y, w, tau)
        assert fit.objective == pytest.approx(oracle, rel=1e-6, abs=1e-12)


def test_weights_act_as_multiplicities(rng):
    n = 20
    x = rng.normal(size=n)
    y = 1.0 + x + rng.normal(size=n)
    X = np.column_stack([np.ones(n), x])
    doubled = weighted_linear_qr(X, y, np.full(n, 2.0), 0.8)
    stacked = weighted_linear_qr(np.vstack([X, X]), np.r_[y, y], None, 0.8)
    assert_allclose(doubled.beta, stacked.beta, atol=1e-8)


def test_qar1_degenerate_and_iid_windows(rng):
    assert qar1_forecast(np.full(50, 0.02), 0.05) == pytest.approx(0.02)
    x = rng.normal(size=500)
    assert qar1_forecast(x, 0.05) == pytest.approx(np.quantile(x, 0.95), abs=0.1)


@pytest.mark.parametrize("K", [5, 7, 20])
def test_flat_quantile_curve_keeps_es_at_least_var(rng, K):
    values = np.concatenate([[-2.4427293213263663, 0.018477976128989014], rng.normal(size=200)])
    for v in values:
        var, es = quantile_curve_var_es(np.ones((30, 1)), np.full(30, v), None, [1.0], 0.05, K)
        assert var == v
        assert es >= var
        assert es == pytest.approx(var, rel=1e-15)
