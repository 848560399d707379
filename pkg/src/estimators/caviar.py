"""
CAViaR recursions for the upper (1 - alpha) quantile of losses.

    SAV            Q_t = b1 + b2 Q_{t-1} + b3 |y_{t-1}|
    AS             Q_t = b1 + b2 Q_{t-1} + b3 (y_{t-1})+ - b4 (y_{t-1})-
    IndirectGarch  Q_t = sqrt(b1 + b2 Q_{t-1}^2 + b3 y_{t-1}^2)
    Adaptive       Q_t = Q_{t-1} + b1 ([1 + exp(-G (y_{t-1} - Q_{t-1}))]^-1 - alpha)

(y)+ = max(y, 0) and (y)- = min(y, 0), so AS with b3 = b4 is SAV. The
Adaptive form rises after a violation and decays otherwise; G acts on
losses divided by the window standard deviation.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal, special

from enums.caviar_spec import CaviarSpec
from estimators.dist_kernel import generator
from estimators.quantile_reg import check_loss
from helpers.errors import DomainError, FitError, ForecastError, InsufficientData
from helpers.helper_functions import type7_quantile

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

MIN_CAVIAR_LENGTH = 100
DEFAULT_STARTS = 25
DEFAULT_G = 10.0
PERSISTENCE_BOX = (0.0, 0.99)
COEF_BOX = (-1.0, 1.0)
PENALTY = 1e10


@dataclass(frozen=True)
class CaviarFit:
    spec: CaviarSpec
    beta: np.ndarray
    alpha_tail: float
    quantile_path: np.ndarray
    objective: float
    G: float = DEFAULT_G
    scale: float = 1.0
    converged: bool = True


def caviar_path(spec: CaviarSpec, beta, y, q0, alpha_tail, G=DEFAULT_G, scale=1.0):
    """
    Quantile path over y with Q_1 = q0. Returns None when the IndirectGarch
    radicand turns negative.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if spec in (CaviarSpec.SAV, CaviarSpec.AS):
        b1, b2 = beta[0], beta[1]
        if spec == CaviarSpec.SAV:
            news = beta[2] * np.abs(y[:-1])
        else:
            news = beta[2] * np.maximum(y[:-1], 0.0) - beta[3] * np.minimum(y[:-1], 0.0)
        drive = np.empty(n)
        drive[0] = q0
        drive[1:] = b1 + news
        return signal.lfilter([1.0], [1.0, -b2], drive)

    if spec == CaviarSpec.INDIRECT_GARCH:
        drive = np.empty(n)
        drive[0] = q0 ** 2
        drive[1:] = beta[0] + beta[2] * y[:-1] ** 2
        squared = signal.lfilter([1.0], [1.0, -beta[1]], drive)
        if np.any(squared < 0) or not np.all(np.isfinite(squared)):
            return None
        return np.sqrt(squared)

    g_eff = G / scale
    q = np.empty(n)
    q[0] = q0
    for t in range(1, n):
        hit = special.expit(g_eff * (y[t - 1] - q[t - 1]))
        q[t] = q[t - 1] + beta[0] * (hit - alpha_tail)
    return q


def _step(spec, beta, q_prev, y_prev, alpha_tail, G, scale):
    if spec == CaviarSpec.SAV:
        return beta[0] + beta[1] * q_prev + beta[2] * abs(y_prev)
    if spec == CaviarSpec.AS:
        return beta[0] + beta[1] * q_prev + beta[2] * max(y_prev, 0.0) - beta[3] * min(y_prev, 0.0)
    if spec == CaviarSpec.INDIRECT_GARCH:
        radicand = beta[0] + beta[1] * q_prev ** 2 + beta[2] * y_prev ** 2
        if radicand < 0:
            raise ForecastError(f"negative IndirectGarch radicand {radicand:g}")
        return float(np.sqrt(radicand))
    hit = special.expit(G / scale * (y_prev - q_prev))
    return q_prev + beta[0] * (hit - alpha_tail)


def _start_points(spec, q0, n_random, rng):
    """Quantile-level start plus uniform draws from the coefficient box."""
    if spec == CaviarSpec.SAV:
        anchor = [0.1 * q0, 0.9, 0.0]
    elif spec == CaviarSpec.AS:
        anchor = [0.1 * q0, 0.9, 0.0, 0.0]
    elif spec == CaviarSpec.INDIRECT_GARCH:
        anchor = [0.1 * q0 ** 2, 0.9, 0.0]
    else:
        anchor = [0.0]
    starts = [np.array(anchor)]
    k = spec.n_params
    for _ in range(n_random):
        point = rng.uniform(*COEF_BOX, size=k)
        if spec != CaviarSpec.ADAPTIVE:
            point[1] = rng.uniform(*PERSISTENCE_BOX)
        if spec == CaviarSpec.INDIRECT_GARCH:
            point[0] = abs(point[0])
            point[2] = abs(point[2])
        starts.append(point)
    return starts


def _to_raw(spec, beta, scale):
    raw = np.array(beta, dtype=float)
    if spec in (CaviarSpec.SAV, CaviarSpec.AS, CaviarSpec.ADAPTIVE):
        raw[0] *= scale
    else:
        raw[0] *= scale ** 2
    return raw


def caviar_fit(window, spec: CaviarSpec, alpha_tail, starts=DEFAULT_STARTS, G=DEFAULT_G, seed=0, stream=0) -> CaviarFit:
    """
    Minimizes the check loss of the path at level 1 - alpha_tail. The window
    is divided by its standard deviation while optimizing so the coefficient
    box is meaningful; returned coefficients are on the loss scale.
    """
    y = np.asarray(window, dtype=float)
    if len(y) < MIN_CAVIAR_LENGTH:
        raise InsufficientData(f"CAViaR needs at least {MIN_CAVIAR_LENGTH} losses, got {len(y)}")
    if not 0 < alpha_tail < 0.5:
        raise DomainError(f"alpha_tail must lie in (0, 0.5), got {alpha_tail}")

    tau = 1.0 - alpha_tail
    scale = float(np.std(y, ddof=1)) or 1.0
    ys = y / scale
    q0s = type7_quantile(ys, tau)

    def objective(beta):
        path = caviar_path(spec, beta, ys, q0s, alpha_tail, G=G, scale=1.0)
        if path is None or not np.all(np.isfinite(path)):
            return PENALTY
        return float(np.sum(check_loss(ys - path, tau)))

    rng = generator(seed, stream)
    results = [
        optimize.minimize(objective, s, method="Nelder-Mead",
                          options={"fatol": 1e-10, "xatol": 1e-8, "maxiter": 400 * spec.n_params})
        for s in _start_points(spec, q0s, starts, rng)
    ]
    best = min(results, key=lambda r: r.fun)
    converged = any(r.success and r.fun < PENALTY for r in results)
    beta = _to_raw(spec, best.x, scale)
    if not converged or best.fun >= PENALTY:
        raise FitError(f"CAViaR {spec} optimizer failed on every start", best_params=beta)

    path = caviar_path(spec, beta, y, q0s * scale, alpha_tail, G=G, scale=scale)
    return CaviarFit(spec=spec, beta=beta, alpha_tail=alpha_tail, quantile_path=path,
                     objective=float(np.sum(check_loss(y - path, tau))), G=G, scale=scale)


def caviar_forecast(f: CaviarFit, last_loss) -> float:
    return float(_step(f.spec, f.beta, float(f.quantile_path[-1]), float(last_loss),
                       f.alpha_tail, f.G, f.scale))


def caviar_filter(window, spec: CaviarSpec, beta, alpha_tail, G=DEFAULT_G) -> CaviarFit:
    """Quantile path of fixed loss-scale coefficients over a window; used for carried-forward fits."""
    y = np.asarray(window, dtype=float)
    tau = 1.0 - alpha_tail
    scale = float(np.std(y, ddof=1)) or 1.0
    beta = np.asarray(beta, dtype=float)
    path = caviar_path(spec, beta, y, type7_quantile(y, tau), alpha_tail, G=G, scale=scale)
    if path is None or not np.all(np.isfinite(path)):
        raise ForecastError(f"CAViaR {spec} path is undefined for the given coefficients")
    return CaviarFit(spec=spec, beta=beta, alpha_tail=alpha_tail, quantile_path=path,
                     objective=float(np.sum(check_loss(y - path, tau))), G=G, scale=scale, converged=False)
