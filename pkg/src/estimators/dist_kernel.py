"""
Unit-variance innovation laws and the Gaussian smoothing kernel.

The Student-t law is always the variance-standardized one, i.e. the classical
t with nu degrees of freedom multiplied by sqrt((nu - 2) / nu), so that a
GARCH sigma is the conditional standard deviation for both kinds.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special, stats

from enums.distributions import DistKind
from helpers.errors import DomainError

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class Dist:
    kind: DistKind
    nu: Optional[float] = None

    def __post_init__(self):
        if self.kind == DistKind.STANDARDIZED_T:
            if self.nu is None or not self.nu > 2:
                raise DomainError(f"standardized t needs nu > 2, got {self.nu}")

    @property
    def scale(self):
        """Factor mapping the classical t onto the unit-variance scale."""
        if self.kind == DistKind.STANDARD_NORMAL:
            return 1.0
        return float(np.sqrt((self.nu - 2.0) / self.nu))

    @classmethod
    def normal(cls):
        return cls(DistKind.STANDARD_NORMAL)

    @classmethod
    def student(cls, nu):
        return cls(DistKind.STANDARDIZED_T, float(nu))


def pdf(d: Dist, x):
    if d.kind == DistKind.STANDARD_NORMAL:
        return stats.norm.pdf(x)
    s = d.scale
    return stats.t.pdf(np.asarray(x) / s, d.nu) / s


def cdf(d: Dist, x):
    if d.kind == DistKind.STANDARD_NORMAL:
        return special.ndtr(x)
    return special.stdtr(d.nu, np.asarray(x) / d.scale)


def quantile(d: Dist, p):
    """Lower p-quantile of the law; the upper tail quantile at level alpha is quantile(d, 1 - alpha)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if d.kind == DistKind.STANDARD_NORMAL:
        q = special.ndtri(p_arr)
    else:
        q = special.stdtrit(d.nu, p_arr) * d.scale
    return float(q) if q.ndim == 0 else q


def abs_moment(d: Dist):
    """E|z| for the unit-variance law."""
    if d.kind == DistKind.STANDARD_NORMAL:
        return float(np.sqrt(2.0 / np.pi))
    nu = d.nu
    log_ratio = special.gammaln((nu + 1.0) / 2.0) - special.gammaln(nu / 2.0)
    return float(2.0 * np.sqrt(nu - 2.0) * np.exp(log_ratio) / ((nu - 1.0) * np.sqrt(np.pi)))


def gaussian_kernel(u):
    return stats.norm.pdf(u)


def generator(seed, stream=0):
    """
    Independent random stream for (seed, stream).

    stream may be an int or a tuple of ints; equal (seed, stream) pairs always
    produce the same draws, regardless of what other streams were used.
    """
    key = tuple(stream) if isinstance(stream, (tuple, list)) else (int(stream),)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def draw(d: Dist, n, rng):
    if d.kind == DistKind.STANDARD_NORMAL:
        return rng.standard_normal(n)
    return rng.standard_t(d.nu, n) * d.scale


def sample(d: Dist, n, seed, stream=0):
    if n < 1:
        raise DomainError(f"sample size must be at least 1, got {n}")
    return draw(d, n, generator(seed, stream))
