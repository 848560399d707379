"""
eGARCH(1,1) data generator with standardized-t innovations and a
multiplicative volatility factor gamma_t, plus its true one-step VaR / ES.

    ln sigma2_t = omega + alpha z_{t-1} + gamma_coef (|z_{t-1}| - E|z|) + beta ln sigma2_{t-1}
    ln sigma2_1 = omega / (1 - beta)
    loss_t      = gamma_t sigma_t z_t
"""
import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from estimators.dist_kernel import Dist, abs_moment, draw, generator
from estimators.risk_formulas import var_es_tgarch
from helpers.common import DEFAULT_ALPHAS
from helpers.errors import DomainError

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class EgarchParams:
    omega: float = -0.40
    alpha: float = -0.09
    gamma_coef: float = 0.16
    beta: float = 0.96
    nu: float = 6.0

    def __post_init__(self):
        if not abs(self.beta) < 1:
            raise DomainError(f"|beta| must be below 1, got {self.beta}")
        if not self.nu > 2:
            raise DomainError(f"nu must exceed 2, got {self.nu}")

    @classmethod
    def from_config(cls, block):
        return cls(**{k: float(block[k]) for k in ("omega", "alpha", "gamma_coef", "beta", "nu") if k in block})


@dataclass(frozen=True)
class SimPath:
    losses: np.ndarray
    sigma_true: np.ndarray
    gamma: np.ndarray
    z: np.ndarray
    params: EgarchParams
    true_var: Dict[float, np.ndarray] = field(default_factory=dict)
    true_es: Dict[float, np.ndarray] = field(default_factory=dict)

    def __len__(self):
        return len(self.losses)


def true_var_es(path: SimPath, alpha_tail):
    """True conditional VaR / ES: sigma_true times the unit-variance t tail values."""
    var1, es1 = var_es_tgarch(1.0, path.params.nu, alpha_tail)
    return path.sigma_true * var1, path.sigma_true * es1


def simulate_egarch(p: EgarchParams, n: int, seed: int, gamma, stream=0, alphas=DEFAULT_ALPHAS) -> SimPath:
    """
    The innovations depend only on (seed, stream), so paths that differ only
    in gamma share the same z draws.
    """
    gamma = np.asarray(getattr(gamma, "values", gamma), dtype=float)
    if n < 2:
        raise DomainError(f"need at least 2 observations, got {n}")
    if len(gamma) != n or np.any(gamma <= 0):
        raise DomainError("gamma must be a positive sequence of length n")

    d = Dist.student(p.nu)
    z = draw(d, n, generator(seed, stream))
    mean_abs = abs_moment(d)

    log_var = np.empty(n)
    log_var[0] = p.omega / (1.0 - p.beta)
    for t in range(1, n):
        log_var[t] = (p.omega + p.alpha * z[t - 1]
                      + p.gamma_coef * (abs(z[t - 1]) - mean_abs)
                      + p.beta * log_var[t - 1])

    sigma_true = gamma * np.exp(0.5 * log_var)
    path = SimPath(losses=sigma_true * z, sigma_true=sigma_true, gamma=gamma, z=z, params=p)
    for a in alphas:
        path.true_var[a], path.true_es[a] = true_var_es(path, a)
    log.debug(f"Simulated eGARCH path n={n} seed={seed} stream={stream}.")
    return path
