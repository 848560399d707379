import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from estimators.dist_kernel import Dist, abs_moment
from estimators.egarch import EgarchParams, simulate_egarch, true_var_es
from estimators.risk_formulas import var_es_tgarch
from helpers.errors import DomainError

PARAMS = EgarchParams()


def test_default_parameters():
    assert (PARAMS.omega, PARAMS.alpha, PARAMS.gamma_coef, PARAMS.beta, PARAMS.nu) == (-0.40, -0.09, 0.16, 0.96, 6.0)


def test_log_variance_recursion():
    path = simulate_egarch(PARAMS, 5, seed=3, gamma=np.ones(5))
    z = path.z
    m = abs_moment(Dist.student(6.0))
    log_var = [PARAMS.omega / (1 - PARAMS.beta)]
    for t in range(1, 5):
        log_var.append(PARAMS.omega + PARAMS.alpha * z[t - 1] + PARAMS.gamma_coef * (abs(z[t - 1]) - m)
                       + PARAMS.beta * log_var[-1])
    assert_allclose(path.sigma_true, np.exp(0.5 * np.array(log_var)))
    assert_allclose(path.losses, path.sigma_true * z)


def test_gamma_scales_the_same_draws():
    base = simulate_egarch(PARAMS, 200, seed=4, gamma=np.ones(200), stream=1)
    scaled = simulate_egarch(PARAMS, 200, seed=4, gamma=np.full(200, 2.0), stream=1)
    assert_array_equal(base.z, scaled.z)
    assert_allclose(scaled.losses, 2.0 * base.losses)
    assert_allclose(scaled.true_var[0.05], 2.0 * base.true_var[0.05])


def test_true_values_follow_t_tail():
    path = simulate_egarch(PARAMS, 100, seed=5, gamma=np.ones(100), alphas=(0.05, 0.01))
    for a in (0.05, 0.01):
        var1, es1 = var_es_tgarch(1.0, 6.0, a)
        assert_allclose(path.true_var[a], path.sigma_true * var1)
        assert_allclose(path.true_es[a], path.sigma_true * es1)
        assert np.all(path.true_es[a] > path.true_var[a])
    var, es = true_var_es(path, 0.025)
    assert np.all((var > path.true_var[0.05]) & (var < path.true_var[0.01]))


def test_true_var_has_nominal_coverage():
    n = 20000
    path = simulate_egarch(PARAMS, n, seed=6, gamma=np.ones(n))
    rate = np.mean(path.losses > path.true_var[0.05])
    assert rate == pytest.approx(0.05, abs=0.006)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        EgarchParams(beta=1.0)
    with pytest.raises(DomainError):
        EgarchParams(nu=2.0)
    with pytest.raises(DomainError):
        simulate_egarch(PARAMS, 10, seed=1, gamma=np.ones(9))
    with pytest.raises(DomainError):
        simulate_egarch(PARAMS, 10, seed=1, gamma=np.zeros(10))
