"""
One-step VaR / ES from a conditional scale.

alpha_tail is always the exceedance probability (0.05, 0.01): VaR is the
upper (1 - alpha_tail) quantile of the loss and ES the mean loss beyond it.
Every function is positively homogeneous in sigma.
"""
import logging
import math

import numpy as np
from scipy import stats

from estimators import evt
from estimators.dist_kernel import Dist, pdf, quantile
from helpers.errors import DomainError, InsufficientData
from helpers.helper_functions import type7_quantile

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


def _check(sigma, alpha_tail):
    if sigma < 0:
        raise DomainError(f"sigma must be non-negative, got {sigma}")
    if not 0 < alpha_tail < 1:
        raise DomainError(f"alpha_tail must lie in (0, 1), got {alpha_tail}")


def var_es_ngarch(sigma, alpha_tail):
    _check(sigma, alpha_tail)
    d = Dist.normal()
    q = quantile(d, 1.0 - alpha_tail)
    return sigma * q, sigma * float(pdf(d, q)) / alpha_tail


def var_es_tgarch(sigma, nu, alpha_tail):
    """
    Unit-variance t: with q_c, f_c the classical t quantile and density,
    VaR = sigma s q_c and ES = sigma s (nu + q_c^2) / (nu - 1) f_c(q_c) / alpha,
    where s = sqrt((nu - 2) / nu).
    """
    _check(sigma, alpha_tail)
    if not nu > 2:
        raise DomainError(f"nu must exceed 2, got {nu}")
    s = Dist.student(nu).scale
    q_c = float(stats.t.ppf(1.0 - alpha_tail, nu))
    f_c = float(stats.t.pdf(q_c, nu))
    tail_mean = (nu + q_c ** 2) / (nu - 1.0) * f_c / alpha_tail
    return sigma * s * q_c, sigma * s * tail_mean


def var_es_dfgarch(sigma, std_residuals, alpha_tail):
    """Empirical upper quantile and mean of the ceil(alpha n) largest residuals."""
    _check(sigma, alpha_tail)
    r = np.asarray(std_residuals, dtype=float)
    n = len(r)
    if n < 1.0 / alpha_tail:
        raise InsufficientData(f"need at least {math.ceil(1.0 / alpha_tail)} residuals, got {n}")
    k = max(1, math.ceil(alpha_tail * n - 1e-9))
    top = np.sort(r)[n - k:]
    return sigma * type7_quantile(r, 1.0 - alpha_tail), sigma * float(np.mean(top))


def var_es_gpdgarch(sigma, f: evt.GpdFit, alpha_tail):
    _check(sigma, alpha_tail)
    q_hat = evt.gpd_tail_quantile(f, alpha_tail)
    return sigma * q_hat, sigma * evt.gpd_tail_es(f, q_hat)
