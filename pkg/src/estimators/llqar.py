"""
Local linear quantile autoregression (LLQAR).

Regression pairs are (predictor window[i-1], response window[i]) for
i = 1..W-1. Each pair is weighted by a Gaussian kernel of its scaled
distance to the current loss L = window[W-1]:

    u_i = (window[i-1] - L) * (W - i) / (W - 1)

so a past loss at the same distance from L counts less the older it is.
The local design row is (1, window[i-1] - L); the forecast is the fitted
intercept, the local quantile at L.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy import special

from enums.bandwidth import BandwidthRule
from estimators.dist_kernel import Dist, gaussian_kernel, pdf, quantile
from estimators.quantile_reg import check_loss, qar1_var_es, quantile_curve_var_es, weighted_qr_or_intercept
from helpers.errors import DegenerateBandwidth, DegenerateWeights, DomainError, InsufficientData
from helpers.helper_functions import iqr, np_linear, type7_quantile

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

MIN_LLQAR_LENGTH = 30
MIN_QCV_LENGTH = 100
MIN_WEIGHT_SUM = 1e-12
DEFAULT_SUBLEVELS = 20


@dataclass(frozen=True)
class LlqarConfig:
    bandwidth_rule: BandwidthRule = BandwidthRule.RULE_OF_THUMB_IQR
    fixed_h: Optional[float] = None
    es_sublevels: int = DEFAULT_SUBLEVELS
    qcv_grid: Sequence[float] = field(default_factory=lambda: tuple(np.round(np_linear(0.05, 0.95, 0.05), 10)))

    def __post_init__(self):
        if self.bandwidth_rule == BandwidthRule.FIXED and not (self.fixed_h and self.fixed_h > 0):
            raise DomainError("the Fixed bandwidth rule needs a positive fixed_h")
        if self.es_sublevels < 5:
            raise DomainError(f"es_sublevels must be at least 5, got {self.es_sublevels}")

    @classmethod
    def from_config(cls, block):
        kwargs = {}
        if "bandwidth_rule" in block:
            kwargs["bandwidth_rule"] = BandwidthRule.parse(block["bandwidth_rule"])
        if block.get("fixed_h") is not None:
            kwargs["fixed_h"] = float(block["fixed_h"])
        if "es_sublevels" in block:
            kwargs["es_sublevels"] = int(block["es_sublevels"])
        if block.get("qcv_grid") is not None:
            kwargs["qcv_grid"] = tuple(float(q) for q in block["qcv_grid"])
        return cls(**kwargs)


@dataclass(frozen=True)
class LlqarWeights:
    u: np.ndarray
    w: np.ndarray
    h: float


@dataclass(frozen=True)
class QcvResult:
    q_opt: float
    h: float
    scores: Dict[float, float]


def _lags(W):
    # lag of predictor i = 1..W-1 is W - i
    return np.arange(W - 1, 0, -1, dtype=float)


def llqar_scaled_distances(window, L=None):
    x = np.asarray(window, dtype=float)
    W = len(x)
    if W < MIN_LLQAR_LENGTH:
        raise InsufficientData(f"LLQAR needs at least {MIN_LLQAR_LENGTH} losses, got {W}")
    if L is None:
        L = x[-1]
    return (x[:-1] - L) * _lags(W) / (W - 1)


def llqar_weights(window, h, L=None) -> LlqarWeights:
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h}")
    u = llqar_scaled_distances(window, L)
    return LlqarWeights(u=u, w=gaussian_kernel(u / h), h=float(h))


def rot_bandwidth(u) -> float:
    """h = (4 / (3n))^(1/5) * IQR(|u|), falling back to max|u| / 10 when the IQR vanishes."""
    a = np.abs(np.asarray(u, dtype=float))
    n = len(a)
    h = (4.0 / (3.0 * n)) ** 0.2 * iqr(a)
    if h > 0:
        return float(h)
    h = 0.1 * float(np.max(a)) if n else 0.0
    if h > 0:
        log.debug("IQR of scaled distances is zero; using max|u| / 10.")
        return h
    raise DegenerateBandwidth("all scaled distances are zero")


def _local_fit(x, y, centre, u, h, tau):
    w = gaussian_kernel(u / h)
    if np.sum(w) < MIN_WEIGHT_SUM:
        raise DegenerateWeights(f"kernel weights sum to {np.sum(w):g}")
    X = np.column_stack([np.ones(len(x)), x - centre])
    return weighted_qr_or_intercept(X, y, w, tau)


def _local_problem(window, h):
    x = np.asarray(window, dtype=float)
    u = llqar_scaled_distances(x)
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h}")
    w = gaussian_kernel(u / h)
    if np.sum(w) < MIN_WEIGHT_SUM:
        raise DegenerateWeights(f"kernel weights sum to {np.sum(w):g}")
    X = np.column_stack([np.ones(len(x) - 1), x[:-1] - x[-1]])
    return X, x[1:], w


def llqar_var(window, alpha_tail, h) -> float:
    X, y, w = _local_problem(window, h)
    return float(weighted_qr_or_intercept(X, y, w, 1.0 - alpha_tail).beta[0])


def llqar_var_es(window, alpha_tail, h, K=DEFAULT_SUBLEVELS):
    """VaR and sub-level-averaged ES at the current loss, after monotone repair."""
    X, y, w = _local_problem(window, h)
    return quantile_curve_var_es(X, y, w, [1.0, 0.0], alpha_tail, K)


def llqar_es(window, alpha_tail, h, K=DEFAULT_SUBLEVELS) -> float:
    return llqar_var_es(window, alpha_tail, h, K)[1]


def qcv_bandwidth(first_window, alpha_tail, grid) -> QcvResult:
    """
    Leave-one-out cross-validation over candidate bandwidths h_q, the q-th
    quantile of |u| on the first window. Each interior pair j is predicted by
    the local fit centred at its own predictor, with pair j left out, and
    scored by the check loss at level 1 - alpha_tail.
    """
    x = np.asarray(first_window, dtype=float)
    W = len(x)
    if W < MIN_QCV_LENGTH:
        raise InsufficientData(f"QCV needs at least {MIN_QCV_LENGTH} losses, got {W}")
    tau = 1.0 - alpha_tail
    predictors, responses = x[:-1], x[1:]
    lags = _lags(W)
    abs_u = np.abs(llqar_scaled_distances(x))

    scores = {}
    for q in grid:
        h = type7_quantile(abs_u, q)
        if not h > 0:
            scores[float(q)] = np.inf
            continue
        total = 0.0
        for j in range(1, len(predictors) - 1):
            keep = np.arange(len(predictors)) != j
            u = (predictors[keep] - predictors[j]) * lags[keep] / (W - 1)
            try:
                fit = _local_fit(predictors[keep], responses[keep], predictors[j], u, h, tau)
            except DegenerateWeights:
                total = np.inf
                break
            total += check_loss(responses[j] - fit.beta[0], tau)
        scores[float(q)] = float(total)
        log.debug(f"QCV q={q:.3f} h={h:.6g} score={total:.6g}")

    finite = {q: s for q, s in scores.items() if np.isfinite(s)}
    if not finite:
        raise DegenerateBandwidth("every QCV candidate bandwidth is degenerate")
    q_opt = min(finite, key=lambda q: (finite[q], q))
    return QcvResult(q_opt=q_opt, h=type7_quantile(abs_u, q_opt), scores=scores)


def select_bandwidth(window, alpha_tail, cfg: LlqarConfig) -> float:
    """Bandwidth of one window under the rule-of-thumb or fixed rule."""
    if cfg.bandwidth_rule == BandwidthRule.FIXED:
        return float(cfg.fixed_h)
    return rot_bandwidth(llqar_scaled_distances(window))


def reference_bandwidths(n, tau, h_mean=None, level=0.05):
    """
    Closed-form quantile-regression bandwidths, reported as diagnostics only:
    Hall-Sheather and Bofinger (probability scale) and, when a mean-regression
    bandwidth h_mean is supplied, Yu-Jones.
    """
    d = Dist.normal()
    x = quantile(d, tau)
    f = float(pdf(d, x))
    z = float(special.ndtri(1.0 - level / 2.0))
    out = {
        "hall_sheather": n ** (-1.0 / 3.0) * z ** (2.0 / 3.0) * (1.5 * f ** 2 / (2.0 * x ** 2 + 1.0)) ** (1.0 / 3.0),
        "bofinger": n ** (-0.2) * (4.5 * f ** 4 / (2.0 * x ** 2 + 1.0) ** 2) ** 0.2,
    }
    if h_mean is not None:
        out["yu_jones"] = h_mean * (tau * (1.0 - tau) / f ** 2) ** 0.2
    return out


def fallback_var_es(window, alpha_tail, K=DEFAULT_SUBLEVELS):
    """Unweighted QAR(1) VaR / ES used when every kernel weight underflows."""
    return qar1_var_es(window, alpha_tail, K)
