import numpy as np
import pandas as pd
import pytest

from experiments.report import COMPARISON_COLUMNS, LONG_COLUMNS, backtest_series, comparison_table, long_format
from experiments.rolling_forecast import ForecastRecord, ForecastSeries
from enums.models import ModelId
from experiments.window_models import NO_FORECAST


def _records(model, alpha, n, rng, gap=False):
    out = []
    for t in range(n):
        missing = gap and t == 0
        out.append(ForecastRecord(t=t, date=str(t), realized_loss=float(rng.normal()),
                                  var=float("nan") if missing else 1.645,
                                  es=float("nan") if missing else 2.06, model=model, alpha_tail=alpha,
                                  flags=frozenset({NO_FORECAST}) if missing else frozenset()))
    return out


def test_backtest_series_skips_rows_without_forecast(rng):
    forecasts = ForecastSeries(tuple(_records(ModelId.QAR1, 0.05, 200, rng, gap=True)
                                     + _records(ModelId.CAVIAR_SAV, 0.05, 200, rng)))
    reports = backtest_series(forecasts, B=200, seed=3)
    assert [r.model for r in reports] == ["QAR1", "CAViaR-SAV"]
    assert reports[0].n == 199
    assert any("skipped 1" in note for note in reports[0].notes)
    assert np.isnan(reports[1].es_boot_p)


def test_comparison_and_long_tables():
    forecasts = pd.DataFrame({
        "model": ["QAR1"] * 3 + ["LLQAR"] * 3,
        "alpha": [0.05] * 6,
        "var": [1.0, 2.0, 3.0, 2.0, 2.0, 2.0],
        "es": [2.0, 3.0, 4.0, 3.0, 3.0, 3.0],
        "flags": [np.nan, "carried-forward-fit", np.nan, np.nan, np.nan, np.nan],
    })
    backtests = pd.DataFrame({"model": ["QAR1", "LLQAR"], "alpha": [0.05, 0.05], "n": [3, 3], "x": [0, 1],
                              "prop": [0.0, 1 / 3], "uc_p": [0.5, 0.4], "cc_p": [0.6, 0.3],
                              "es_boot_p": [np.nan, 0.2], "v": [np.nan, 0.1]})
    table = comparison_table(forecasts, backtests)
    assert list(table.columns) == COMPARISON_COLUMNS
    qar = table[table["model"] == "QAR1"].iloc[0]
    assert qar["mean_var"] == pytest.approx(2.0)
    assert qar["mean_es"] == pytest.approx(3.0)
    assert qar["flagged"] == 1
    long = long_format(table)
    assert list(long.columns) == LONG_COLUMNS
    assert len(long) == 2 * (len(COMPARISON_COLUMNS) - 2)
