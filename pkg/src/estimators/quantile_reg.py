"""
Check-loss machinery, weighted linear quantile regression and QAR(1).

The weighted regression is solved exactly as the linear program

    min  sum_i w_i (tau u+_i + (1 - tau) u-_i)
    s.t. X beta + u+ - u- = y,   u+, u- >= 0

with HiGHS dual simplex, so the returned beta is a basic (vertex) solution.
Intercept-only problems are answered by the weighted lower quantile, which is
the left end of the optimal interval.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse

from helpers.errors import DegenerateWeights, DomainError, FitError, InsufficientData, SingularDesign
from helpers.helper_functions import weighted_lower_quantile

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

MIN_QAR_LENGTH = 30
EXTRA_ROWS = 5
LP_OPTIONS = {
    "presolve": True,
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True)
class QrFit:
    beta: np.ndarray
    tau: float
    objective: float

    def predict(self, row):
        return float(np.dot(self.beta, row))


def check_loss(x, tau):
    """rho_tau(x) = x (tau - 1[x <= 0])."""
    x = np.asarray(x, dtype=float)
    value = x * (tau - (x <= 0))
    return float(value) if value.ndim == 0 else value


def qr_objective(X, y, w, tau, beta):
    return float(np.sum(np.asarray(w) * check_loss(np.asarray(y) - np.asarray(X) @ beta, tau)))


def _validate(X, y, w, tau):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
    if X.shape[0] != len(y) or len(w) != len(y):
        raise DomainError(f"design has {X.shape[0]} rows for {len(y)} responses and {len(w)} weights")
    if not 0 < tau < 1:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite and non-negative")
    if X.shape[0] < X.shape[1] + EXTRA_ROWS:
        raise InsufficientData(f"need at least {X.shape[1] + EXTRA_ROWS} rows, got {X.shape[0]}")
    if not np.any(w > 0):
        raise DegenerateWeights("all weights are zero")
    return X, y, w


def weighted_linear_qr(X, y, w, tau) -> QrFit:
    X, y, w = _validate(X, y, w, tau)
    active = w > 0
    Xa, ya, wa = X[active], y[active], w[active]
    p = X.shape[1]
    if np.linalg.matrix_rank(Xa) < p:
        raise SingularDesign(f"design of rank {np.linalg.matrix_rank(Xa)} < {p} columns")

    if p == 1 and np.all(Xa[:, 0] == Xa[0, 0]):
        beta = np.array([weighted_lower_quantile(ya, wa, tau) / Xa[0, 0]])
        return QrFit(beta=beta, tau=tau, objective=qr_objective(X, y, w, tau, beta))

    # scale responses, columns and weights to order one before handing to the LP
    y_scale = float(np.max(np.abs(ya))) or 1.0
    col_scale = np.max(np.abs(Xa), axis=0)
    col_scale[col_scale == 0] = 1.0
    ws = wa / np.max(wa)

    m = len(ya)
    c = np.concatenate([np.zeros(p), tau * ws, (1.0 - tau) * ws])
    identity = sparse.identity(m, format="csr")
    A_eq = sparse.hstack([sparse.csr_matrix(Xa / col_scale), identity, -identity], format="csr")
    bounds = [(None, None)] * p + [(0, None)] * (2 * m)
    res = optimize.linprog(c, A_eq=A_eq, b_eq=ya / y_scale, bounds=bounds, method="highs-ds",
                           options=LP_OPTIONS)
    if res.status != 0:
        raise FitError(f"quantile regression LP failed: {res.message}")

    beta = res.x[:p] * y_scale / col_scale
    return QrFit(beta=beta, tau=tau, objective=qr_objective(X, y, w, tau, beta))


def weighted_qr_or_intercept(X, y, w, tau) -> QrFit:
    """
    weighted_linear_qr that falls back to the intercept-only fit when the
    slope columns carry no variation among positively weighted rows.
    Coefficients of the dropped columns are reported as zero.
    """
    try:
        return weighted_linear_qr(X, y, w, tau)
    except SingularDesign:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
        fit = weighted_linear_qr(X[:, :1], y, w, tau)
        beta = np.zeros(X.shape[1])
        beta[0] = fit.beta[0]
        return QrFit(beta=beta, tau=tau, objective=qr_objective(X, y, w, tau, beta))


def qar1_fit(window, alpha_tail) -> QrFit:
    """Unweighted regression of L_t on (1, L_{t-1}) at level 1 - alpha_tail."""
    x = np.asarray(window, dtype=float)
    if len(x) < MIN_QAR_LENGTH:
        raise InsufficientData(f"QAR(1) needs at least {MIN_QAR_LENGTH} losses, got {len(x)}")
    X = np.column_stack([np.ones(len(x) - 1), x[:-1]])
    return weighted_qr_or_intercept(X, x[1:], None, 1.0 - alpha_tail)


def qar1_forecast(window, alpha_tail) -> float:
    fit = qar1_fit(window, alpha_tail)
    return fit.predict([1.0, float(window[-1])])


def sublevels(alpha_tail, K):
    """Midpoints alpha (j - 1/2) / K, j = 1..K."""
    return alpha_tail * (np.arange(1, K + 1) - 0.5) / K


def quantile_curve_var_es(X, y, w, row, alpha_tail, K):
    """
    VaR at alpha_tail and ES as the mean of the quantiles at the K midpoint
    sub-levels of (0, alpha_tail), predicted at design row `row`.

    Quantiles are made non-increasing in the tail probability by a running
    maximum that starts at alpha_tail, so ES >= VaR always holds.
    """
    levels = np.concatenate([[alpha_tail], sublevels(alpha_tail, K)[::-1]])
    raw = [weighted_qr_or_intercept(X, y, w, 1.0 - a).predict(row) for a in levels]
    repaired = np.maximum.accumulate(raw)
    var = float(repaired[0])
    # the mean of equal quantiles can round one ulp below them
    return var, max(float(np.mean(repaired[1:])), var)


def repair_across_levels(values):
    """
    values maps alpha -> (var, es). VaR and ES are made non-increasing in
    alpha by a running maximum from the largest alpha down.
    """
    out = {}
    var_max = es_max = -np.inf
    for a in sorted(values, reverse=True):
        var, es = values[a]
        var_max, es_max = max(var_max, var), max(es_max, es)
        out[a] = (var_max, es_max)
    return out


def qar1_var_es(window, alpha_tail, K):
    x = np.asarray(window, dtype=float)
    if len(x) < MIN_QAR_LENGTH:
        raise InsufficientData(f"QAR(1) needs at least {MIN_QAR_LENGTH} losses, got {len(x)}")
    X = np.column_stack([np.ones(len(x) - 1), x[:-1]])
    return quantile_curve_var_es(X, x[1:], None, [1.0, float(x[-1])], alpha_tail, K)
