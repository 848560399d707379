"""
Price ingestion, log losses, rolling windows and descriptive statistics.
"""
import io
import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd
from scipy import stats

from helpers.common import DEFAULT_WINDOW
from helpers.errors import DomainError, InsufficientData, OrderError, ParseError

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

PRICE_COLUMNS = ["date", "close"]
MIN_WINDOW = 10


@dataclass(frozen=True)
class PriceSeries:
    dates: np.ndarray
    prices: np.ndarray

    def __len__(self):
        return len(self.prices)


@dataclass(frozen=True)
class LogLossSeries:
    """Dates are opaque ordered labels; losses[t] belongs to dates[t]."""

    dates: np.ndarray
    losses: np.ndarray

    def __len__(self):
        return len(self.losses)

    @classmethod
    def from_values(cls, losses, dates=None):
        losses = np.asarray(losses, dtype=float)
        if dates is None:
            dates = np.arange(len(losses)).astype(str)
        return cls(dates=np.asarray(dates, dtype=str), losses=losses)


@dataclass(frozen=True)
class Window:
    start: int
    values: np.ndarray

    @property
    def size(self):
        return len(self.values)

    @property
    def target(self):
        return self.start + len(self.values)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    sd: float
    skewness: float
    kurtosis: float
    """Excess kurtosis; NaN (undefined) for a constant series, as is skewness."""
    min: float
    max: float

    def as_rows(self):
        return [
            ("mean", self.mean),
            ("sd", self.sd),
            ("skewness", self.skewness),
            ("kurtosis", self.kurtosis),
            ("min", self.min),
            ("max", self.max),
        ]


def parse_price_csv(text) -> PriceSeries:
    """
    Reads a `date,close` CSV from a string or text stream.

    Rows are numbered from 1 (first data row) in the errors raised. Files with
    any other column layout, OHLC files included, are rejected.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    try:
        frame = pd.read_csv(text, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(0, f"unreadable CSV: {e}")

    columns = [c.strip().lower() for c in frame.columns]
    if columns != PRICE_COLUMNS:
        raise ParseError(0, f"expected header 'date,close', got {','.join(frame.columns)}")
    frame.columns = PRICE_COLUMNS

    parsed_dates = pd.to_datetime(frame["date"].str.strip(), format="ISO8601", errors="coerce")
    closes = pd.to_numeric(frame["close"].str.strip(), errors="coerce")

    previous = None
    for i in range(len(frame)):
        row = i + 1
        if pd.isna(parsed_dates.iloc[i]):
            raise ParseError(row, f"invalid date {frame['date'].iloc[i]!r}")
        close = closes.iloc[i]
        if pd.isna(close) or not np.isfinite(close):
            raise ParseError(row, f"invalid close {frame['close'].iloc[i]!r}")
        if close <= 0:
            raise ParseError(row, f"close must be positive, got {close}")
        if previous is not None and parsed_dates.iloc[i] <= previous:
            raise OrderError(row)
        previous = parsed_dates.iloc[i]

    if len(frame) < 2:
        raise InsufficientData(f"need at least 2 prices, got {len(frame)}")

    log.debug(f"Parsed {len(frame)} price rows.")
    return PriceSeries(
        dates=frame["date"].str.strip().to_numpy(dtype=str),
        prices=closes.to_numpy(dtype=float),
    )


def log_losses(p: PriceSeries) -> LogLossSeries:
    """losses[t] = -ln(prices[t + 1] / prices[t]), dated at the later price."""
    losses = -np.diff(np.log(p.prices))
    return LogLossSeries(dates=p.dates[1:], losses=losses)


def summary_stats(l: LogLossSeries) -> SummaryStats:
    x = np.asarray(l.losses, dtype=float)
    if len(x) < 2:
        raise InsufficientData(f"summary statistics need at least 2 losses, got {len(x)}")
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        skewness = kurtosis = float("nan")
    else:
        skewness = float(stats.skew(x, bias=True))
        kurtosis = float(stats.kurtosis(x, fisher=True, bias=True))
    return SummaryStats(
        mean=float(np.mean(x)),
        sd=sd,
        skewness=skewness,
        kurtosis=kurtosis,
        min=float(np.min(x)),
        max=float(np.max(x)),
    )


def rolling_windows(l: LogLossSeries, W: int = DEFAULT_WINDOW) -> List[Window]:
    """Window k covers indices [k, k + W) and forecasts index k + W."""
    if W < MIN_WINDOW:
        raise DomainError(f"window size must be at least {MIN_WINDOW}, got {W}")
    n = len(l)
    if n <= W:
        raise InsufficientData(f"series of length {n} has no target for window size {W}")
    values = np.array(l.losses, dtype=float)
    values.setflags(write=False)
    return [Window(start=k, values=values[k:k + W]) for k in range(n - W)]
