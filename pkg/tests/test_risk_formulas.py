import numpy as np
import pytest
from scipy import integrate

from estimators.dist_kernel import Dist, pdf, sample
from estimators.evt import GpdFit, gpd_tail_es, gpd_tail_quantile
from estimators.risk_formulas import var_es_dfgarch, var_es_gpdgarch, var_es_ngarch, var_es_tgarch
from helpers.errors import DomainError, InsufficientData


def test_normal_var_es():
    var, es = var_es_ngarch(1.0, 0.05)
    assert var == pytest.approx(1.644854, abs=1e-6)
    assert es == pytest.approx(2.062713, abs=1e-6)


def test_positive_homogeneity():
    for alpha in (0.05, 0.01):
        var1, es1 = var_es_ngarch(1.0, alpha)
        var2, es2 = var_es_ngarch(2.5, alpha)
        assert var2 == pytest.approx(2.5 * var1)
        assert es2 == pytest.approx(2.5 * es1)
    var1, es1 = var_es_tgarch(1.0, 5.0, 0.01)
    var2, es2 = var_es_tgarch(0.3, 5.0, 0.01)
    assert (var2, es2) == pytest.approx((0.3 * var1, 0.3 * es1))


@pytest.mark.parametrize("nu", [3.5, 6.0, 12.0])
@pytest.mark.parametrize("alpha", [0.05, 0.01])
def test_t_es_matches_tail_integral(nu, alpha):
    d = Dist.student(nu)
    var, es = var_es_tgarch(1.0, nu, alpha)
    tail, _ = integrate.quad(lambda x: x * pdf(d, x), var, np.inf)
    assert es == pytest.approx(tail / alpha, rel=1e-6)
    assert es > var > 0


def test_t_approaches_normal():
    assert var_es_tgarch(1.0, 1e6, 0.05) == pytest.approx(var_es_ngarch(1.0, 0.05), rel=1e-4)


def test_empirical_tail():
    r = np.arange(1.0, 101.0)
    var, es = var_es_dfgarch(1.0, r, 0.05)
    assert var == pytest.approx(95.05)
    assert es == pytest.approx(98.0)
    assert var_es_dfgarch(2.0, r, 0.05) == pytest.approx((190.1, 196.0))


def test_empirical_tail_needs_enough_residuals():
    with pytest.raises(InsufficientData):
        var_es_dfgarch(1.0, np.arange(10.0), 0.05)


def test_gpd_exponential_tail():
    fit = GpdFit(zeta=0.0, psi=1.0, u=0.0, n_total=100, n_exceed=10)
    var, es = var_es_gpdgarch(1.0, fit, 0.01)
    assert var == pytest.approx(np.log(10.0))
    assert es == pytest.approx(np.log(10.0) + 1.0)
    assert var_es_gpdgarch(3.0, fit, 0.01) == pytest.approx((3.0 * var, 3.0 * es))


def test_gpd_quantile_is_continuous_in_zeta():
    exact = GpdFit(zeta=0.0, psi=0.7, u=1.2, n_total=250, n_exceed=25)
    near = GpdFit(zeta=1e-9, psi=0.7, u=1.2, n_total=250, n_exceed=25)
    assert gpd_tail_quantile(near, 0.01) == pytest.approx(gpd_tail_quantile(exact, 0.01), rel=1e-7)


def test_gpd_es_hand_value():
    fit = GpdFit(zeta=0.5, psi=1.0, u=1.0, n_total=100, n_exceed=10)
    assert gpd_tail_es(fit, 2.0) == pytest.approx(5.0)


def test_domain_checks():
    with pytest.raises(DomainError):
        var_es_ngarch(-1.0, 0.05)
    with pytest.raises(DomainError):
        var_es_ngarch(1.0, 0.0)
    with pytest.raises(DomainError):
        var_es_tgarch(1.0, 2.0, 0.05)


def test_t_tail_mean_matches_monte_carlo():
    z = sample(Dist.student(6.0), 1_000_000, seed=2024)
    var, es = var_es_tgarch(1.0, 6.0, 0.05)
    empirical = np.sort(z)[-50_000:]
    assert empirical.mean() / empirical[0] == pytest.approx(es / var, rel=0.01)


def test_degenerate_residuals_and_zero_scale():
    assert var_es_dfgarch(2.0, np.full(40, 0.7), 0.05) == pytest.approx((1.4, 1.4))
    assert var_es_ngarch(0.0, 0.05) == (0.0, 0.0)
    assert var_es_ngarch(1.0, 0.01)[0] > var_es_ngarch(1.0, 0.05)[0]
