import numpy as np
import pytest
from scipy import stats

from estimators.evt import GpdFit, fit_gpd, fit_tail, gpd_tail_es, gpd_tail_quantile, select_threshold
from helpers.errors import DomainError, InsufficientData, InsufficientTail, TailError, TailMeanUndefined


def test_threshold_of_integer_ramp():
    u, exceedances = select_threshold(np.arange(1.0, 101.0), 0.9)
    assert u == pytest.approx(90.1)
    assert len(exceedances) == 10
    assert np.all(exceedances > 0)


def test_exceedances_keep_original_order():
    r = np.arange(1.0, 101.0)[::-1].copy()
    _, exceedances = select_threshold(r, 0.9)
    assert np.all(np.diff(exceedances) < 0)


def test_threshold_errors():
    with pytest.raises(InsufficientTail):
        select_threshold(np.full(150, 0.3), 0.9)
    with pytest.raises(InsufficientData):
        select_threshold(np.arange(50.0), 0.9)
    with pytest.raises(DomainError):
        select_threshold(np.arange(200.0), 0.4)


@pytest.mark.parametrize("zeta", [0.0, 0.2])
def test_gpd_fit_recovers_parameters(zeta):
    x = stats.genpareto.rvs(zeta, scale=0.8, size=5000, random_state=np.random.default_rng(3))
    zeta_hat, psi_hat = fit_gpd(x)
    assert zeta_hat == pytest.approx(zeta, abs=0.1)
    assert psi_hat == pytest.approx(0.8, abs=0.1)


def test_gpd_fit_input_checks():
    with pytest.raises(InsufficientTail):
        fit_gpd(np.ones(5))
    with pytest.raises(DomainError):
        fit_gpd(np.concatenate([np.ones(20), [-0.5]]))


def test_fit_tail_records_counts():
    r = np.random.default_rng(5).standard_t(5, 1000)
    fit = fit_tail(r, 0.9)
    assert fit.n_total == 1000
    assert fit.n_exceed == 100
    assert fit.tail_fraction == pytest.approx(0.1)
    assert -0.5 < fit.zeta < 0.99 and fit.psi > 0


def test_quantile_outside_modeled_tail():
    fit = GpdFit(zeta=0.1, psi=1.0, u=1.0, n_total=100, n_exceed=10)
    assert gpd_tail_quantile(fit, 0.1) == pytest.approx(1.0)
    with pytest.raises(TailError):
        gpd_tail_quantile(fit, 0.2)


def test_tail_mean_undefined_and_below_threshold():
    with pytest.raises(TailMeanUndefined):
        gpd_tail_es(GpdFit(zeta=1.0, psi=1.0, u=1.0, n_total=100, n_exceed=10), 3.0)
    with pytest.raises(DomainError):
        gpd_tail_es(GpdFit(zeta=0.2, psi=1.0, u=1.0, n_total=100, n_exceed=10), 0.5)


def test_es_exceeds_var():
    fit = GpdFit(zeta=0.3, psi=0.6, u=1.3, n_total=250, n_exceed=25)
    for alpha in (0.05, 0.01):
        q = gpd_tail_quantile(fit, alpha)
        assert gpd_tail_es(fit, q) > q >= fit.u


@pytest.mark.slow
def test_recovery_across_seeds():
    estimates = np.array([
        fit_gpd(stats.genpareto.rvs(0.2, scale=1.0, size=5000, random_state=np.random.default_rng(seed)))
        for seed in range(50)
    ])
    zeta_hat, psi_hat = np.median(estimates, axis=0)
    assert zeta_hat == pytest.approx(0.2, abs=0.02)
    assert psi_hat == pytest.approx(1.0, abs=0.03)
    assert np.mean(np.abs(estimates[:, 0] - 0.2) < 0.06) > 0.9
