"""
CSV readers and writers for every file the toolkit consumes or produces.

All files are UTF-8 with a header row and '\n' line endings; floats are
written at full precision so that repeated runs produce identical bytes.
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from helpers.errors import ParseError
from market.market_data import LogLossSeries

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

LOSS_COLUMNS = ["date", "loss"]
SUMMARY_COLUMNS = ["stat", "value"]
FORECAST_COLUMNS = ["t", "date", "loss", "model", "alpha", "var", "es", "flags", "sigma"]
BACKTEST_COLUMNS = ["model", "alpha", "n", "x", "prop", "uc_lr", "uc_p", "cc_lr", "cc_p",
                    "es_boot_p", "v1", "v2", "v", "rmse_var", "rmse_es"]
SIMPATH_BASE_COLUMNS = ["t", "loss", "sigma_true", "gamma"]


def write_frame(frame: pd.DataFrame, path, columns=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is not None:
        frame = frame.reindex(columns=columns)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    log.info(f"Wrote {len(frame)} rows to {path}.")
    return path


def read_frame(path, required) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, keep_default_na=True, dtype={"flags": str, "date": str, "model": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(0, f"unreadable CSV {path}: {e}")
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ParseError(0, f"{path} lacks columns {missing}")
    return frame


def read_losses_csv(path) -> LogLossSeries:
    """Reads `date,loss` files; simulated-path files label rows by `t` instead of a date."""
    frame = read_frame(path, ["loss"])
    if "date" not in frame.columns:
        if "t" not in frame.columns:
            raise ParseError(0, f"{path} has neither a date nor a t column")
        frame["date"] = frame["t"].astype(str)
    losses = pd.to_numeric(frame["loss"], errors="coerce")
    bad = np.flatnonzero(~np.isfinite(losses.to_numpy(dtype=float)))
    if len(bad):
        raise ParseError(int(bad[0]) + 1, f"invalid loss {frame['loss'].iloc[bad[0]]!r}")
    return LogLossSeries(dates=frame["date"].astype(str).to_numpy(), losses=losses.to_numpy(dtype=float))


def write_losses_csv(series: LogLossSeries, path):
    frame = pd.DataFrame({"date": series.dates, "loss": series.losses})
    return write_frame(frame, path, LOSS_COLUMNS)


def write_summary_csv(summary, path):
    frame = pd.DataFrame(summary.as_rows(), columns=SUMMARY_COLUMNS)
    return write_frame(frame, path, SUMMARY_COLUMNS)
