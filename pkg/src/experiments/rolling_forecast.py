"""
Rolling one-step-ahead forecasting.

Every window of W consecutive losses yields one forecast record for the
index that follows it. A series is processed stream by stream, one stream
per (model, alpha), with the windows of a stream visited in time order.
"""
import logging
import math
from dataclasses import dataclass
from typing import FrozenSet, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from enums.models import ModelId, forecasters
from experiments.window_models import CARRIED_FORWARD, NO_FORECAST, ForecastContext, StreamState, WindowForecast
from helpers.common import DEFAULT_WINDOW
from helpers.config import DEFAULT_CONFIG
from helpers.csv_io import FORECAST_COLUMNS, read_frame, write_frame
from helpers.errors import DomainError, NumericalError, ParseError
from market.market_data import LogLossSeries, rolling_windows

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class ForecastRecord:
    t: int
    date: str
    realized_loss: float
    var: float
    es: Optional[float]
    model: ModelId
    alpha_tail: float
    flags: FrozenSet[str] = frozenset()
    sigma: Optional[float] = None

    def as_row(self):
        return {
            "t": self.t,
            "date": self.date,
            "loss": self.realized_loss,
            "model": str(self.model),
            "alpha": self.alpha_tail,
            "var": self.var,
            "es": math.nan if self.es is None else self.es,
            "flags": ";".join(sorted(self.flags)),
            "sigma": math.nan if self.sigma is None else self.sigma,
        }


@dataclass(frozen=True)
class ForecastSeries:
    records: Tuple[ForecastRecord, ...]

    def __len__(self):
        return len(self.records)

    def streams(self):
        """(model, alpha) keys in order of first appearance."""
        keys = []
        for r in self.records:
            if (r.model, r.alpha_tail) not in keys:
                keys.append((r.model, r.alpha_tail))
        return keys

    def select(self, model, alpha_tail):
        return [r for r in self.records if r.model == model and r.alpha_tail == alpha_tail]

    def flag_counts(self):
        counts = {}
        for r in self.records:
            for flag in r.flags:
                key = (r.model, r.alpha_tail, flag)
                counts[key] = counts.get(key, 0) + 1
        return counts

    def to_frame(self):
        return pd.DataFrame([r.as_row() for r in self.records], columns=FORECAST_COLUMNS)


def rolling_forecast(series: LogLossSeries, model: ModelId, alpha_tail, W=DEFAULT_WINDOW, config=None,
                     truth=None, context: Optional[ForecastContext] = None) -> ForecastSeries:
    """
    Forecasts every target index of the series for one (model, alpha) stream.

    Numerical failures on a window never abort the stream: a failed fit
    carries the previous window's parameters forward, and a window with
    nothing to carry repeats the previous forecast (or, on the first window,
    is written with NaN values and the no-forecast flag).
    """
    config = DEFAULT_CONFIG if config is None else config
    model = model if isinstance(model, ModelId) else ModelId.parse(model)
    if not 0 < alpha_tail < 0.5:
        raise DomainError(f"alpha_tail must lie in (0, 0.5), got {alpha_tail}")
    if model.needs_truth and truth is None:
        raise DomainError("the Oracle model needs a simulated path with known truth")

    windows = rolling_windows(series, W)
    if context is None:
        context = ForecastContext(series, W, config, truth)
    forecaster = forecasters[model]
    state = StreamState()

    records = []
    for window in windows:
        try:
            forecast = forecaster(context, window, alpha_tail, state)
        except NumericalError as e:
            if state.last is not None:
                log.warning(f"{model} alpha={alpha_tail} window {window.start}: {e}; repeating last forecast.")
                forecast = WindowForecast(var=state.last.var, es=state.last.es, sigma=state.last.sigma,
                                          flags=frozenset({CARRIED_FORWARD}))
            else:
                log.warning(f"{model} alpha={alpha_tail} window {window.start}: {e}; no forecast.")
                forecast = WindowForecast(var=math.nan, es=math.nan if model.has_es else None,
                                          flags=frozenset({NO_FORECAST}))
        if forecast.flags.isdisjoint({NO_FORECAST}):
            state.last = forecast

        t = window.target
        records.append(ForecastRecord(
            t=t,
            date=str(series.dates[t]),
            realized_loss=float(series.losses[t]),
            var=float(forecast.var),
            es=forecast.es if model.has_es else None,
            model=model,
            alpha_tail=float(alpha_tail),
            flags=forecast.flags,
            sigma=forecast.sigma,
        ))
        log.debug(f"{model} alpha={alpha_tail} t={t} var={forecast.var:.6g}")

    return ForecastSeries(records=tuple(records))


class RollingForecastProcedure:
    """
    Runs every (model, alpha) stream over one series.
    3 sections - startup, execute, shutdown.
    Records and progress are passed to `listener(kind, payload)` when given.
    """

    DATA_COLUMNS = FORECAST_COLUMNS

    def __init__(self, series: LogLossSeries, models: Sequence, alphas: Sequence[float], W=DEFAULT_WINDOW,
                 config=None, truth=None, listener=None):
        self.series = series
        self.models = [m if isinstance(m, ModelId) else ModelId.parse(m) for m in models]
        self.alphas = [float(a) for a in alphas]
        self.W = int(W)
        self.config = DEFAULT_CONFIG if config is None else config
        self.truth = truth
        self.listener = listener
        self.records = []
        self._last_reported = -10

    def emit(self, kind, payload):
        if kind == "progress" and payload >= self._last_reported + 10:
            self._last_reported = payload - payload % 10
            log.info(f"Rolling forecast {payload:.0f}% complete.")
        if self.listener is not None:
            self.listener(kind, payload)

    def startup(self):
        rolling_windows(self.series, self.W)  # raises InsufficientData for short series
        self.context = ForecastContext(self.series, self.W, self.config, self.truth)
        log.info(f"Forecasting {len(self.series) - self.W} targets for {len(self.models)} models "
                 f"at alphas {self.alphas}.")

    def execute(self):
        total = len(self.models) * len(self.alphas)
        done = 0
        for model in self.models:
            for alpha in self.alphas:
                result = rolling_forecast(self.series, model, alpha, self.W, self.config, self.truth, self.context)
                self.records.extend(result.records)
                self.emit("results", result)
                done += 1
                self.emit("progress", 100.0 * done / total)

    def shutdown(self):
        for (model, alpha, flag), count in sorted(self.result().flag_counts().items(), key=str):
            log.info(f"{model} alpha={alpha}: {count} windows flagged {flag}.")

    def result(self) -> ForecastSeries:
        return ForecastSeries(records=tuple(self.records))

    def run(self) -> ForecastSeries:
        self.startup()
        self.execute()
        self.shutdown()
        return self.result()


def write_forecast_csv(forecasts: ForecastSeries, path):
    return write_frame(forecasts.to_frame(), path, FORECAST_COLUMNS)


def _optional(value):
    return None if pd.isna(value) else float(value)


def read_forecast_csv(path) -> ForecastSeries:
    """Reads a forecast CSV; files without the trailing sigma column are accepted."""
    frame = read_frame(path, [c for c in FORECAST_COLUMNS if c != "sigma"])
    if "sigma" not in frame.columns:
        frame["sigma"] = np.nan
    records = []
    for i, row in enumerate(frame.itertuples(index=False), start=1):
        try:
            model = ModelId.parse(row.model)
        except ValueError as e:
            raise ParseError(i, str(e))
        flags = frozenset(f for f in ("" if pd.isna(row.flags) else str(row.flags)).split(";") if f)
        records.append(ForecastRecord(
            t=int(row.t),
            date=str(row.date),
            realized_loss=float(row.loss),
            var=float(row.var),
            es=_optional(row.es),
            model=model,
            alpha_tail=float(row.alpha),
            flags=flags,
            sigma=_optional(row.sigma),
        ))
    return ForecastSeries(records=tuple(records))
