"""
Peaks-over-threshold tail model for standardized residuals.

Exceedances x = r - u over the threshold u follow the generalized Pareto law
G(x) = 1 - (1 + zeta x / psi)^(-1 / zeta) (exponential when zeta = 0).
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from helpers.errors import DomainError, FitError, InsufficientData, InsufficientTail, TailError, TailMeanUndefined
from helpers.helper_functions import type7_quantile

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

MIN_RESIDUALS = 100
MIN_EXCEEDANCES = 10
ZETA_BOUNDS = (-0.5, 0.99)
DEFAULT_THRESHOLD_PROB = 0.90
PENALTY = 1e10


@dataclass(frozen=True)
class GpdFit:
    zeta: float
    psi: float
    u: float
    n_total: int
    n_exceed: int

    @property
    def tail_fraction(self):
        return self.n_exceed / self.n_total


def select_threshold(residuals, p_u=DEFAULT_THRESHOLD_PROB):
    """Threshold at the type-7 p_u-quantile; exceedances keep their original order."""
    r = np.asarray(residuals, dtype=float)
    if len(r) < MIN_RESIDUALS:
        raise InsufficientData(f"threshold selection needs {MIN_RESIDUALS} residuals, got {len(r)}")
    if not 0.5 < p_u < 1:
        raise DomainError(f"threshold probability must lie in (0.5, 1), got {p_u}")
    u = type7_quantile(r, p_u)
    exceedances = r[r > u] - u
    if len(exceedances) < MIN_EXCEEDANCES:
        raise InsufficientTail(f"only {len(exceedances)} exceedances over u = {u:g}")
    return u, exceedances


def gpd_loglik(exceedances, zeta, psi):
    if psi <= 0:
        return -np.inf
    return float(np.sum(stats.genpareto.logpdf(exceedances, zeta, scale=psi)))


def fit_gpd(exceedances):
    """
    Maximum likelihood for (zeta, psi) by Nelder-Mead on (zeta, log psi),
    zeta restricted to (-0.5, 0.99). Starts from the moment estimates and
    from the exponential fit.
    """
    x = np.asarray(exceedances, dtype=float)
    if len(x) < MIN_EXCEEDANCES:
        raise InsufficientTail(f"GPD fit needs {MIN_EXCEEDANCES} exceedances, got {len(x)}")
    if np.any(x <= 0):
        raise DomainError("exceedances must be positive")

    lo, hi = ZETA_BOUNDS

    def objective(theta):
        zeta, log_psi = theta
        if not lo < zeta < hi:
            return PENALTY
        value = -gpd_loglik(x, zeta, np.exp(log_psi))
        return value if np.isfinite(value) else PENALTY

    m, v = float(np.mean(x)), float(np.var(x, ddof=1))
    zeta_mom = float(np.clip(0.5 * (1.0 - m ** 2 / v), lo + 0.05, hi - 0.05)) if v > 0 else 0.0
    psi_mom = 0.5 * m * (m ** 2 / v + 1.0) if v > 0 else m
    starts = [(zeta_mom, np.log(psi_mom)), (0.0, np.log(m)), (0.2, np.log(0.8 * m))]

    results = [
        optimize.minimize(objective, np.array(s), method="Nelder-Mead",
                          options={"fatol": 1e-10, "xatol": 1e-8, "maxiter": 2000})
        for s in starts
    ]
    converged = [r for r in results if r.success and r.fun < PENALTY]
    if not converged:
        best = min(results, key=lambda r: r.fun)
        raise FitError("GPD optimizer failed on every start",
                       best_params=(float(best.x[0]), float(np.exp(best.x[1]))))
    best = min(converged, key=lambda r: r.fun)
    return float(best.x[0]), float(np.exp(best.x[1]))


def fit_tail(residuals, p_u=DEFAULT_THRESHOLD_PROB) -> GpdFit:
    """Threshold selection followed by the GPD fit of the exceedances."""
    r = np.asarray(residuals, dtype=float)
    u, exceedances = select_threshold(r, p_u)
    zeta, psi = fit_gpd(exceedances)
    return GpdFit(zeta=zeta, psi=psi, u=u, n_total=len(r), n_exceed=len(exceedances))


def gpd_tail_quantile(f: GpdFit, alpha_tail):
    """
    q = u + (psi / zeta) [((n / N_u) alpha)^(-zeta) - 1], and
    q = u + psi ln(N_u / (n alpha)) in the zeta -> 0 limit.
    """
    if not 0 < alpha_tail <= f.tail_fraction * (1 + 1e-12):
        raise TailError(f"alpha_tail {alpha_tail} lies outside the modeled tail (<= {f.tail_fraction:g})")
    log_ratio = np.log(f.n_total * alpha_tail / f.n_exceed)
    if f.zeta == 0.0:
        return float(f.u - f.psi * log_ratio)
    return float(f.u + f.psi * np.expm1(-f.zeta * log_ratio) / f.zeta)


def gpd_tail_es(f: GpdFit, q_hat):
    """ES = q / (1 - zeta) + (psi - zeta u) / (1 - zeta)."""
    if f.zeta >= 1:
        raise TailMeanUndefined(f"tail mean is infinite for zeta = {f.zeta}")
    if q_hat < f.u:
        raise DomainError(f"quantile {q_hat} lies below the threshold {f.u}")
    return float((q_hat + f.psi - f.zeta * f.u) / (1.0 - f.zeta))
