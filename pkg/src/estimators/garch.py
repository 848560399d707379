"""
GARCH(1,1) on demeaned window losses, normal or standardized-t innovations.

    e_t       = loss_t - mu                (mu = window sample mean)
    sigma2_t  = omega + alpha e_{t-1}^2 + beta sigma2_{t-1}
    sigma2_1  = window sample variance
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, signal, special

from enums.distributions import DistKind
from estimators.dist_kernel import Dist, draw, generator
from helpers.errors import DomainError, FitError, InsufficientData

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

MIN_FIT_LENGTH = 100
STARTS = ((0.05, 0.90), (0.10, 0.85), (0.02, 0.95), (0.20, 0.70), (0.05, 0.50))
NU_START = 8.0
NU_BOUNDS = (2.1, 100.0)
PENALTY = 1e10


@dataclass(frozen=True)
class GarchParams:
    omega: float
    alpha: float
    beta: float
    mu: float
    nu: Optional[float] = None

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        if self.alpha < 0 or self.beta < 0 or not self.alpha + self.beta < 1:
            raise DomainError(f"need alpha, beta >= 0 and alpha + beta < 1, got {self.alpha}, {self.beta}")

    def innovation(self, kind: DistKind) -> Dist:
        if kind == DistKind.STANDARDIZED_T:
            return Dist.student(self.nu)
        return Dist.normal()


@dataclass(frozen=True)
class FittedGarch:
    params: GarchParams
    sigma: np.ndarray
    std_residuals: np.ndarray
    loglik: float
    innovation: Dist
    converged: bool = True


def _variance_path(omega, alpha, beta, e, sigma2_start):
    drive = np.empty_like(e)
    drive[0] = sigma2_start
    drive[1:] = omega + alpha * e[:-1] ** 2
    return signal.lfilter([1.0], [1.0, -beta], drive)


def _loglik(e, sigma2, kind, nu=None):
    if kind == DistKind.STANDARD_NORMAL:
        return float(-0.5 * np.sum(np.log(2.0 * np.pi) + np.log(sigma2) + e ** 2 / sigma2))
    const = special.gammaln((nu + 1.0) / 2.0) - special.gammaln(nu / 2.0) - 0.5 * np.log(np.pi * (nu - 2.0))
    return float(
        len(e) * const
        - 0.5 * np.sum(np.log(sigma2))
        - 0.5 * (nu + 1.0) * np.sum(np.log1p(e ** 2 / ((nu - 2.0) * sigma2)))
    )


def _check_window(values):
    values = np.asarray(values, dtype=float)
    if len(values) < MIN_FIT_LENGTH:
        raise InsufficientData(f"GARCH fit needs at least {MIN_FIT_LENGTH} losses, got {len(values)}")
    if np.ptp(values) == 0:
        raise DomainError("GARCH fit needs a nonconstant window")
    return values


def garch_filter(params: GarchParams, values, kind: DistKind, converged=True) -> FittedGarch:
    """Runs the variance recursion for fixed parameters over a window."""
    values = np.asarray(values, dtype=float)
    e = values - params.mu
    sigma2 = _variance_path(params.omega, params.alpha, params.beta, e, np.var(values, ddof=1))
    sigma = np.sqrt(sigma2)
    return FittedGarch(
        params=params,
        sigma=sigma,
        std_residuals=e / sigma,
        loglik=_loglik(e, sigma2, kind, params.nu),
        innovation=params.innovation(kind),
        converged=converged,
    )


def garch_loglik(params: GarchParams, values, kind: DistKind) -> float:
    return garch_filter(params, values, kind).loglik


def _logit(p):
    return np.log(p) - np.log1p(-p)


def _decode(theta, kind):
    persistence = min(special.expit(theta[1]), 1.0 - 1e-9)
    share = special.expit(theta[2])
    omega = max(np.exp(theta[0]), 1e-300)
    alpha = persistence * share
    beta = persistence * (1.0 - share)
    nu = None
    if kind == DistKind.STANDARDIZED_T:
        lo, hi = NU_BOUNDS
        nu = lo + (hi - lo) * special.expit(theta[3])
    return omega, alpha, beta, nu


def _encode(omega, alpha, beta, nu, kind):
    theta = [np.log(omega), _logit(alpha + beta), _logit(alpha / (alpha + beta))]
    if kind == DistKind.STANDARDIZED_T:
        lo, hi = NU_BOUNDS
        theta.append(_logit((nu - lo) / (hi - lo)))
    return np.array(theta)


def fit_garch(values, kind: DistKind) -> FittedGarch:
    """
    Maximum likelihood over 5 fixed starting points with Nelder-Mead on an
    unconstrained reparameterization (log omega, logit persistence, logit
    ARCH share, logit-bounded nu).
    """
    values = _check_window(values)
    mu = float(np.mean(values))
    e = values - mu
    sample_var = float(np.var(values, ddof=1))

    def objective(theta):
        omega, alpha, beta, nu = _decode(theta, kind)
        sigma2 = _variance_path(omega, alpha, beta, e, sample_var)
        if not np.all(np.isfinite(sigma2)) or np.any(sigma2 <= 0):
            return PENALTY
        value = -_loglik(e, sigma2, kind, nu)
        return value if np.isfinite(value) else PENALTY

    results = []
    for alpha0, beta0 in STARTS:
        omega0 = (1.0 - alpha0 - beta0) * sample_var
        theta0 = _encode(omega0, alpha0, beta0, NU_START, kind)
        res = optimize.minimize(
            objective,
            theta0,
            method="Nelder-Mead",
            options={"fatol": 1e-8, "xatol": 1e-7, "maxiter": 4000, "maxfev": 8000},
        )
        results.append(res)

    def to_params(theta):
        omega, alpha, beta, nu = _decode(theta, kind)
        return GarchParams(omega=float(omega), alpha=float(alpha), beta=float(beta), mu=mu,
                           nu=None if nu is None else float(nu))

    converged = [r for r in results if r.success and r.fun < PENALTY]
    if not converged:
        best = min(results, key=lambda r: r.fun)
        log.debug(f"GARCH({kind}) fit did not converge from any start.")
        raise FitError("GARCH optimizer failed on every start", best_params=to_params(best.x))

    chosen = min(converged, key=lambda r: r.fun)
    return garch_filter(to_params(chosen.x), values, kind)


def forecast_sigma(f: FittedGarch, last_loss: float) -> float:
    """sigma_{T+1} from the last residual and last conditional variance of the fit."""
    p = f.params
    sigma2_next = p.omega + p.alpha * (last_loss - p.mu) ** 2 + p.beta * f.sigma[-1] ** 2
    return float(np.sqrt(sigma2_next))


def simulate_garch(params: GarchParams, n: int, seed: int, kind: DistKind, stream=0, burn: int = 500):
    """Loss path mu + sigma_t z_t started from the stationary variance."""
    rng = generator(seed, stream)
    z = draw(params.innovation(kind), n + burn, rng)
    sigma2 = params.omega / (1.0 - params.alpha - params.beta)
    out = np.empty(n + burn)
    for t in range(n + burn):
        eps = np.sqrt(sigma2) * z[t]
        out[t] = eps
        sigma2 = params.omega + params.alpha * eps ** 2 + params.beta * sigma2
    return params.mu + out[burn:]
