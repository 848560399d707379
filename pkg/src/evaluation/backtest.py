"""
VaR coverage tests, the ES bootstrap test, the V measure and errors against
simulation truth.

A violation is a strict exceedance, loss_t > VaR_t.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special, stats

from estimators.dist_kernel import generator
from helpers.common import MIN_BOOTSTRAP, TEST_LEVEL
from helpers.errors import (AlignmentError, DegenerateResiduals, DomainError, EmptyResiduals,
                            InsufficientData, NotApplicable)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

DEFAULT_BOOTSTRAP = 1000
DEFAULT_REGIONS = 5


@dataclass(frozen=True)
class ViolationSeries:
    indicators: np.ndarray
    x: int
    n: int


@dataclass(frozen=True)
class RegionErrorSummary:
    """Forecast error by equal-count bins of the true value, lowest bin first."""

    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray
    bias: np.ndarray
    variance: np.ndarray


@dataclass
class BacktestReport:
    model: str
    alpha_tail: float
    n: int
    x: int
    violation_prop: float
    uc_lr: float
    uc_p: float
    cc_lr: float
    cc_p: float
    es_boot_p: float = math.nan
    v1: float = math.nan
    v2: float = math.nan
    v: float = math.nan
    rmse_var: Optional[float] = None
    rmse_es: Optional[float] = None
    notes: list = field(default_factory=list)

    def rejected(self, level=TEST_LEVEL):
        """Rejection flags per test; a test that could not run is not a rejection."""
        return {
            "uc": bool(self.uc_p < level),
            "cc": bool(self.cc_p < level),
            "es_boot": bool(np.isfinite(self.es_boot_p) and self.es_boot_p < level),
        }


def _aligned(*arrays):
    arrays = [np.asarray(a, dtype=float) for a in arrays]
    if len({len(a) for a in arrays}) != 1:
        raise AlignmentError(f"sequence lengths differ: {[len(a) for a in arrays]}")
    return arrays


def violations(losses, var) -> ViolationSeries:
    losses, var = _aligned(losses, var)
    indicators = (losses > var).astype(int)
    return ViolationSeries(indicators=indicators, x=int(indicators.sum()), n=len(indicators))


def kupiec_uc(x, n, alpha_tail):
    """Unconditional coverage LR statistic, chi-square with 1 degree of freedom."""
    if n < 1 or not 0 <= x <= n:
        raise DomainError(f"need 0 <= x <= n and n >= 1, got x={x}, n={n}")
    pi_hat = x / n
    null = (n - x) * math.log(1.0 - alpha_tail) + x * math.log(alpha_tail)
    alternative = special.xlogy(n - x, 1.0 - pi_hat) + special.xlogy(x, pi_hat)
    lr = max(-2.0 * (null - alternative), 0.0)
    return float(lr), float(stats.chi2.sf(lr, 1))


def _transition_counts(indicators):
    prev, curr = indicators[:-1], indicators[1:]
    n00 = int(np.sum((prev == 0) & (curr == 0)))
    n01 = int(np.sum((prev == 0) & (curr == 1)))
    n10 = int(np.sum((prev == 1) & (curr == 0)))
    n11 = int(np.sum((prev == 1) & (curr == 1)))
    return n00, n01, n10, n11


def christoffersen_cc(v: ViolationSeries, alpha_tail):
    """
    Conditional coverage: LR_uc plus the first-order Markov independence LR,
    chi-square with 2 degrees of freedom.
    """
    if v.n < 2:
        raise InsufficientData(f"conditional coverage needs at least 2 forecasts, got {v.n}")
    lr_uc, _ = kupiec_uc(v.x, v.n, alpha_tail)
    n00, n01, n10, n11 = _transition_counts(np.asarray(v.indicators))

    pi = (n01 + n11) / (n00 + n01 + n10 + n11)
    pi01 = n01 / (n00 + n01) if n00 + n01 else 0.0
    pi11 = n11 / (n10 + n11) if n10 + n11 else 0.0
    log_l0 = special.xlogy(n00 + n10, 1.0 - pi) + special.xlogy(n01 + n11, pi)
    log_l1 = (special.xlogy(n00, 1.0 - pi01) + special.xlogy(n01, pi01)
              + special.xlogy(n10, 1.0 - pi11) + special.xlogy(n11, pi11))
    lr_ind = max(-2.0 * (log_l0 - log_l1), 0.0)
    lr_cc = lr_uc + lr_ind
    return float(lr_cc), float(stats.chi2.sf(lr_cc, 2))


def exceedance_residuals(losses, var, es, sigma=None):
    """(loss_t - es_t) / sigma_t at violation times; sigma = 1 for models without a scale."""
    losses, var, es = _aligned(losses, var, es)
    sigma = np.ones(len(losses)) if sigma is None else _aligned(losses, sigma)[1]
    hit = losses > var
    if not hit.any():
        raise EmptyResiduals("no violations, exceedance residuals are empty")
    if np.any(~(sigma[hit] > 0)):
        raise DomainError("sigma must be positive at violation times")
    return (losses[hit] - es[hit]) / sigma[hit]


def es_bootstrap_test(r, B=DEFAULT_BOOTSTRAP, seed=0, stream=0):
    """
    One-sided bootstrap test of zero mean against mean > 0 (ES too small).

    Resamples the centred residuals with replacement and compares the
    studentized means with the observed one: p = (1 + #{t* >= t_obs}) / (B + 1).
    """
    if B < MIN_BOOTSTRAP:
        raise DomainError(f"bootstrap needs at least {MIN_BOOTSTRAP} resamples, got {B}")
    r = np.asarray(r, dtype=float)
    m = len(r)
    if m < 3:
        raise InsufficientData(f"bootstrap test needs at least 3 residuals, got {m}")
    sd = float(np.std(r, ddof=1))
    if sd == 0:
        raise DegenerateResiduals("residuals have zero spread")
    t_obs = float(np.mean(r)) / (sd / math.sqrt(m))

    centred = r - np.mean(r)
    rng = generator(seed, stream)
    draws = centred[rng.integers(0, m, size=(B, m))]
    means = draws.mean(axis=1)
    sds = draws.std(axis=1, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = np.where(sds > 0, means / (sds / math.sqrt(m)), np.sign(means) * np.inf)
    t_star = np.nan_to_num(t_star, nan=0.0, posinf=np.inf, neginf=-np.inf)
    return float((1 + np.sum(t_star >= t_obs)) / (B + 1))


def v_measure(losses, var, es):
    """V1 = mean(es - var), V2 = mean(loss - var) over violations; V = V1 - V2."""
    losses, var, es = _aligned(losses, var, es)
    hit = losses > var
    if not hit.any():
        raise NotApplicable("V measure needs at least one violation")
    v1 = float(np.mean(es[hit] - var[hit]))
    v2 = float(np.mean(losses[hit] - var[hit]))
    return v1, v2, v1 - v2


def rmse(forecast, truth):
    forecast, truth = _aligned(forecast, truth)
    return float(np.sqrt(np.mean((forecast - truth) ** 2)))


def region_errors(forecast, truth, regions=DEFAULT_REGIONS) -> RegionErrorSummary:
    """
    Bias and variance of forecast - truth in equal-count bins of the sorted
    truth. Truth values tied across a bin boundary all go to the lower bin,
    so a later bin may come out short or empty (NaN statistics).
    """
    forecast, truth = _aligned(forecast, truth)
    if regions < 2:
        raise DomainError(f"need at least 2 regions, got {regions}")
    if len(truth) < regions:
        raise InsufficientData(f"{len(truth)} targets cannot fill {regions} regions")
    order = np.argsort(truth, kind="stable")
    sorted_truth = truth[order]
    error = forecast - truth
    cuts = np.cumsum([len(b) for b in np.array_split(order, regions)])[:-1]
    cuts = [int(np.searchsorted(sorted_truth, sorted_truth[c - 1], side="right")) for c in cuts]
    bins = np.split(order, cuts)

    def per_bin(fn, values):
        return np.array([fn(values[b]) if len(b) else np.nan for b in bins])

    return RegionErrorSummary(
        lower=per_bin(np.min, truth),
        upper=per_bin(np.max, truth),
        counts=np.array([len(b) for b in bins]),
        bias=per_bin(np.mean, error),
        variance=per_bin(np.var, error),
    )


def backtest_forecasts(model, alpha_tail, losses, var, es=None, sigma=None, true_var=None,
                       true_es=None, B=DEFAULT_BOOTSTRAP, seed=0, stream=0) -> BacktestReport:
    """Runs every applicable test on one (model, alpha) forecast stream."""
    v = violations(losses, var)
    uc_lr, uc_p = kupiec_uc(v.x, v.n, alpha_tail)
    cc_lr, cc_p = christoffersen_cc(v, alpha_tail)
    report = BacktestReport(model=str(model), alpha_tail=alpha_tail, n=v.n, x=v.x,
                            violation_prop=v.x / v.n, uc_lr=uc_lr, uc_p=uc_p, cc_lr=cc_lr, cc_p=cc_p)

    if es is not None:
        try:
            r = exceedance_residuals(losses, var, es, sigma)
            report.es_boot_p = es_bootstrap_test(r, B=B, seed=seed, stream=stream)
        except (NotApplicable, DegenerateResiduals, InsufficientData) as e:
            report.notes.append(f"es_boot: {e}")
        try:
            report.v1, report.v2, report.v = v_measure(losses, var, es)
        except NotApplicable as e:
            report.notes.append(f"v: {e}")

    if true_var is not None:
        report.rmse_var = rmse(var, true_var)
    if true_es is not None and es is not None:
        report.rmse_es = rmse(es, true_es)
    return report
