"""
Backtests of forecast files and the per-model comparison tables built from
forecast and backtest CSVs.
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from evaluation.backtest import DEFAULT_BOOTSTRAP, backtest_forecasts
from experiments.rolling_forecast import ForecastSeries
from helpers.csv_io import BACKTEST_COLUMNS, read_frame, write_frame

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

COMPARISON_COLUMNS = ["model", "alpha", "n", "x", "prop", "uc_p", "cc_p", "es_boot_p", "v",
                      "mean_var", "mean_es", "flagged"]
LONG_COLUMNS = ["model", "alpha", "metric", "value"]


def backtest_series(forecasts: ForecastSeries, B=DEFAULT_BOOTSTRAP, seed=0):
    """One BacktestReport per (model, alpha) stream, in file order. Rows without a forecast are skipped."""
    reports = []
    for i, (model, alpha) in enumerate(forecasts.streams()):
        records = [r for r in forecasts.select(model, alpha) if np.isfinite(r.var)]
        skipped = len(forecasts.select(model, alpha)) - len(records)
        losses = np.array([r.realized_loss for r in records])
        var = np.array([r.var for r in records])
        es = None
        if model.has_es and all(r.es is not None for r in records):
            es = np.array([r.es for r in records])
        sigma = None
        if all(r.sigma is not None for r in records):
            sigma = np.array([r.sigma for r in records])
        report = backtest_forecasts(model, alpha, losses, var, es=es, sigma=sigma, B=B, seed=seed, stream=(i,))
        if skipped:
            report.notes.append(f"skipped {skipped} rows without a forecast")
            log.warning(f"{model} alpha={alpha}: skipped {skipped} rows without a forecast.")
        reports.append(report)
    return reports


def reports_to_frame(reports) -> pd.DataFrame:
    rows = [{
        "model": r.model, "alpha": r.alpha_tail, "n": r.n, "x": r.x, "prop": r.violation_prop,
        "uc_lr": r.uc_lr, "uc_p": r.uc_p, "cc_lr": r.cc_lr, "cc_p": r.cc_p, "es_boot_p": r.es_boot_p,
        "v1": r.v1, "v2": r.v2, "v": r.v, "rmse_var": r.rmse_var, "rmse_es": r.rmse_es,
    } for r in reports]
    return pd.DataFrame(rows, columns=BACKTEST_COLUMNS)


def write_backtest_csv(reports, path):
    return write_frame(reports_to_frame(reports), path, BACKTEST_COLUMNS)


def read_backtest_csv(path) -> pd.DataFrame:
    return read_frame(path, BACKTEST_COLUMNS)


def comparison_table(forecasts: pd.DataFrame, backtests: pd.DataFrame) -> pd.DataFrame:
    """
    One row per (model, alpha): backtest statistics joined with the mean
    forecasts and the number of flagged windows from the forecast file.
    """
    frame = forecasts.copy()
    frame["flagged"] = frame["flags"].fillna("").astype(str).str.len() > 0
    means = frame.groupby(["model", "alpha"], sort=False).agg(
        mean_var=("var", "mean"), mean_es=("es", "mean"), flagged=("flagged", "sum")).reset_index()
    joined = backtests.merge(means, on=["model", "alpha"], how="left", validate="one_to_one")
    return joined.reindex(columns=COMPARISON_COLUMNS)


def long_format(table: pd.DataFrame) -> pd.DataFrame:
    """Plot-ready (model, alpha, metric, value) rows."""
    long = table.melt(id_vars=["model", "alpha"], var_name="metric", value_name="value")
    return long.reindex(columns=LONG_COLUMNS)


def write_report(forecast_path, backtest_path, out_dir):
    out_dir = Path(out_dir)
    forecasts = read_frame(forecast_path, ["model", "alpha", "var", "es", "flags"])
    table = comparison_table(forecasts, read_backtest_csv(backtest_path))
    return [
        write_frame(table, out_dir / "comparison.csv", COMPARISON_COLUMNS),
        write_frame(long_format(table), out_dir / "comparison_long.csv", LONG_COLUMNS),
    ]
