"""
Per-window forecasters for every model family, and the per-series context
that shares GARCH fits, GPD tail fits and LLQAR curves across the
(model, alpha) streams of one series.

A forecaster takes (context, window, alpha_tail, state) and returns the
forecast for the window's target index. `state` belongs to one stream and
holds the last good fit for carry-forward.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Optional

import numpy as np

from enums.bandwidth import BandwidthRule
from enums.caviar_spec import CaviarSpec
from enums.distributions import DistKind
from estimators.caviar import caviar_filter, caviar_fit, caviar_forecast
from estimators.egarch import true_var_es
from estimators.evt import fit_tail
from estimators.garch import fit_garch, forecast_sigma, garch_filter
from estimators.llqar import LlqarConfig, fallback_var_es, llqar_var_es, qcv_bandwidth, select_bandwidth
from estimators.quantile_reg import qar1_var_es, repair_across_levels
from estimators.risk_formulas import var_es_dfgarch, var_es_gpdgarch, var_es_ngarch, var_es_tgarch
from helpers.errors import DegenerateBandwidth, DegenerateWeights, FitError, ForecastError, InsufficientTail

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

CARRIED_FORWARD = "carried-forward-fit"
WEIGHT_FALLBACK = "weight-fallback"
NO_FORECAST = "no-forecast"

# first spawn-key word of the CAViaR multi-start streams
CAVIAR_STREAM = 2


@dataclass(frozen=True)
class WindowForecast:
    var: float
    es: Optional[float] = None
    sigma: Optional[float] = None
    flags: FrozenSet[str] = frozenset()


@dataclass
class StreamState:
    last_fit: Optional[object] = None
    last: Optional[WindowForecast] = None


@dataclass
class _Cached:
    value: object
    carried: bool = False
    extra: Dict = field(default_factory=dict)


class ForecastContext:
    """
    Shared state for every stream over one loss series. Windows of a stream
    must be visited in increasing start order so carry-forward can find the
    previous window's fit.
    """

    def __init__(self, series, W, config, truth=None):
        self.series = series
        self.W = int(W)
        self.truth = truth
        self.seed = int(config["seed"])
        self.alphas = tuple(float(a) for a in config["alphas"])
        self.threshold_prob = float(config["evt"]["threshold_prob"])
        self.caviar_starts = int(config["caviar"]["starts"])
        self.caviar_G = float(config["caviar"]["G"])
        self.llqar_config = LlqarConfig.from_config(config["llqar"])
        self.bandwidths_used: Dict[float, list] = {}
        self._garch = {}
        self._tails = {}
        self._llqar = {}
        self._qar1 = {}
        self._qcv = {}
        self._truth = {}

    # GARCH kinds

    def garch(self, window, kind: DistKind) -> _Cached:
        key = (kind, window.start)
        if key not in self._garch:
            self._garch[key] = self._fit_garch(window, kind)
        return self._garch[key]

    def _fit_garch(self, window, kind):
        try:
            return _Cached(fit_garch(window.values, kind))
        except FitError as e:
            previous = self._garch.get((kind, window.start - 1))
            params = previous.value.params if previous is not None else e.best_params
            if params is None:
                raise
            log.warning(f"GARCH({kind}) fit failed on window {window.start}; carrying parameters forward.")
            params = replace(params, mu=float(np.mean(window.values)))
            return _Cached(garch_filter(params, window.values, kind, converged=False), carried=True)

    def tail(self, window, kind: DistKind):
        """GARCH fit of the innovation kind plus the GPD fit of its standardized residuals."""
        key = (kind, window.start)
        if key not in self._tails:
            fitted = self.garch(window, kind)
            try:
                self._tails[key] = _Cached(fit_tail(fitted.value.std_residuals, self.threshold_prob),
                                           carried=fitted.carried)
            except (FitError, InsufficientTail) as e:
                previous = self._tails.get((kind, window.start - 1))
                if previous is None:
                    raise
                log.warning(f"GPD tail fit failed on window {window.start} ({e}); carrying forward.")
                self._tails[key] = _Cached(previous.value, carried=True)
        return self.garch(window, kind), self._tails[key]

    # QAR(1) and LLQAR

    def levels(self, alpha_tail):
        return tuple(sorted(set(self.alphas) | {alpha_tail}))

    def qar1(self, window, alpha_tail):
        """VaR / ES for every configured level of one window, repaired to be monotone across levels."""
        key = (window.start, self.levels(alpha_tail))
        if key not in self._qar1:
            K = self.llqar_config.es_sublevels
            self._qar1[key] = repair_across_levels({a: qar1_var_es(window.values, a, K) for a in key[1]})
        return self._qar1[key][alpha_tail]

    def bandwidth(self, window, alpha_tail):
        cfg = self.llqar_config
        if cfg.bandwidth_rule == BandwidthRule.QCV:
            if alpha_tail not in self._qcv:
                first = self.series.losses[:self.W]
                result = qcv_bandwidth(first, alpha_tail, cfg.qcv_grid)
                log.info(f"QCV bandwidth for alpha={alpha_tail}: q={result.q_opt:.2f}, h={result.h:.6g}")
                self._qcv[alpha_tail] = result.h
            return self._qcv[alpha_tail]
        return select_bandwidth(window.values, alpha_tail, cfg)

    def llqar(self, window, alpha_tail):
        """VaR / ES for every configured level of one window, repaired to be monotone across levels."""
        levels = self.levels(alpha_tail)
        key = (window.start, levels)
        if key not in self._llqar:
            K = self.llqar_config.es_sublevels
            values, flags = {}, {}
            for a in levels:
                try:
                    h = self.bandwidth(window, a)
                    values[a] = llqar_var_es(window.values, a, h, K)
                    self.bandwidths_used.setdefault(a, []).append(h)
                    flags[a] = frozenset()
                except (DegenerateBandwidth, DegenerateWeights) as e:
                    log.warning(f"LLQAR window {window.start} alpha={a}: {e}; using unweighted QAR(1).")
                    values[a] = fallback_var_es(window.values, a, K)
                    flags[a] = frozenset({WEIGHT_FALLBACK})
            self._llqar[key] = _Cached(repair_across_levels(values), extra=flags)
        cached = self._llqar[key]
        return cached.value[alpha_tail], cached.extra[alpha_tail]

    # Oracle

    def true_values(self, alpha_tail):
        if alpha_tail not in self._truth:
            if alpha_tail in self.truth.true_var:
                self._truth[alpha_tail] = (self.truth.true_var[alpha_tail], self.truth.true_es[alpha_tail])
            else:
                self._truth[alpha_tail] = true_var_es(self.truth, alpha_tail)
        return self._truth[alpha_tail]


def _located(mu, var, es, sigma, carried):
    flags = frozenset({CARRIED_FORWARD}) if carried else frozenset()
    return WindowForecast(var=mu + var, es=mu + es, sigma=sigma, flags=flags)


def forecast_ngarch(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    fitted = ctx.garch(window, DistKind.STANDARD_NORMAL)
    sigma = forecast_sigma(fitted.value, window.values[-1])
    var, es = var_es_ngarch(sigma, alpha_tail)
    return _located(fitted.value.params.mu, var, es, sigma, fitted.carried)


def forecast_tgarch(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    fitted = ctx.garch(window, DistKind.STANDARDIZED_T)
    sigma = forecast_sigma(fitted.value, window.values[-1])
    var, es = var_es_tgarch(sigma, fitted.value.params.nu, alpha_tail)
    return _located(fitted.value.params.mu, var, es, sigma, fitted.carried)


def forecast_dfgarch(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    # Gaussian quasi-likelihood fit, empirical residual tail
    fitted = ctx.garch(window, DistKind.STANDARD_NORMAL)
    sigma = forecast_sigma(fitted.value, window.values[-1])
    var, es = var_es_dfgarch(sigma, fitted.value.std_residuals, alpha_tail)
    return _located(fitted.value.params.mu, var, es, sigma, fitted.carried)


def _forecast_gpd(kind, ctx, window, alpha_tail):
    fitted, tail = ctx.tail(window, kind)
    sigma = forecast_sigma(fitted.value, window.values[-1])
    var, es = var_es_gpdgarch(sigma, tail.value, alpha_tail)
    return _located(fitted.value.params.mu, var, es, sigma, fitted.carried or tail.carried)


def forecast_gpd_ngarch(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    return _forecast_gpd(DistKind.STANDARD_NORMAL, ctx, window, alpha_tail)


def forecast_gpd_tgarch(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    return _forecast_gpd(DistKind.STANDARDIZED_T, ctx, window, alpha_tail)


def forecast_qar1(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    var, es = ctx.qar1(window, alpha_tail)
    return WindowForecast(var=var, es=es)


def forecast_llqar(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    (var, es), flags = ctx.llqar(window, alpha_tail)
    return WindowForecast(var=var, es=es, flags=flags)


def _forecast_caviar(spec, ctx, window, alpha_tail, state):
    flags = set()
    try:
        fit = caviar_fit(window.values, spec, alpha_tail, starts=ctx.caviar_starts, G=ctx.caviar_G,
                         seed=ctx.seed, stream=(CAVIAR_STREAM, window.target))
        state.last_fit = fit
    except FitError as e:
        beta = state.last_fit.beta if state.last_fit is not None else e.best_params
        if beta is None:
            raise
        log.warning(f"CAViaR {spec} fit failed on window {window.start}; carrying coefficients forward.")
        fit = caviar_filter(window.values, spec, beta, alpha_tail, G=ctx.caviar_G)
        flags.add(CARRIED_FORWARD)
    try:
        var = caviar_forecast(fit, window.values[-1])
    except ForecastError:
        if state.last is None:
            raise
        log.warning(f"CAViaR {spec} forecast undefined on window {window.start}; repeating the last one.")
        var = state.last.var
        flags.add(CARRIED_FORWARD)
    return WindowForecast(var=var, flags=frozenset(flags))


def forecast_caviar_sav(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    return _forecast_caviar(CaviarSpec.SAV, ctx, window, alpha_tail, state)


def forecast_caviar_as(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    return _forecast_caviar(CaviarSpec.AS, ctx, window, alpha_tail, state)


def forecast_caviar_ig(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    return _forecast_caviar(CaviarSpec.INDIRECT_GARCH, ctx, window, alpha_tail, state)


def forecast_caviar_adaptive(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    return _forecast_caviar(CaviarSpec.ADAPTIVE, ctx, window, alpha_tail, state)


def forecast_oracle(ctx: ForecastContext, window, alpha_tail, state: StreamState) -> WindowForecast:
    true_var, true_es = ctx.true_values(alpha_tail)
    t = window.target
    return WindowForecast(var=float(true_var[t]), es=float(true_es[t]), sigma=float(ctx.truth.sigma_true[t]))
