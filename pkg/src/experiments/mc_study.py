"""
Monte Carlo study: simulate eGARCH-t paths under a volatility scenario,
forecast every (model, alpha) stream with rolling windows, backtest each
stream against the simulation truth and aggregate over replications.

Replication k draws from the (seed, k) stream, so a replication's outcome
does not depend on which worker ran it. Outcomes are reduced in
replication order.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from enums.models import ModelId
from enums.scenarios import GammaSpec
from estimators.egarch import EgarchParams
from estimators.llqar import reference_bandwidths
from evaluation.backtest import BacktestReport, backtest_forecasts, region_errors
from experiments.rolling_forecast import rolling_forecast
from experiments.simulate import path_losses, simulate_scenario
from experiments.window_models import NO_FORECAST, ForecastContext
from helpers.config import DEFAULT_CONFIG, deep_merge, resolve
from helpers.csv_io import write_frame
from helpers.errors import TailRiskError

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

TESTS = ("uc", "cc", "es_boot")
REJECTION_COLUMNS = ["scenario", "model", "alpha", "test", "rejections", "completed", "pct"]
RMSE_COLUMNS = ["rep", "model", "alpha", "rmse_var", "rmse_es"]
REGION_COLUMNS = ["model", "alpha", "measure", "region", "lower", "upper", "count", "bias", "variance"]
EXCLUSION_COLUMNS = ["rep", "model", "alpha", "reason"]
NONCONVERGENCE_COLUMNS = ["model", "alpha", "windows_flagged"]
BANDWIDTH_COLUMNS = ["alpha", "llqar_h_mean", "hall_sheather", "bofinger", "yu_jones"]


@dataclass(frozen=True)
class StudyConfig:
    egarch: EgarchParams
    n_obs: int
    n_reps: int
    window: int
    alphas: Tuple[float, ...]
    models: Tuple[ModelId, ...]
    scenario: GammaSpec
    seed: int
    bootstrap_B: int
    test_level: float
    regions: int
    workers: int
    raw: Dict = field(repr=False, compare=False, default_factory=dict)

    @classmethod
    def from_dict(cls, cfg):
        cfg = resolve(deep_merge(DEFAULT_CONFIG, cfg))
        return cls(
            egarch=EgarchParams.from_config(cfg["egarch"]),
            n_obs=int(cfg["n_obs"]),
            n_reps=int(cfg["n_reps"]),
            window=int(cfg["window"]),
            alphas=tuple(float(a) for a in cfg["alphas"]),
            models=tuple(ModelId.parse(m) for m in cfg["models"]),
            scenario=GammaSpec.parse(cfg["scenario"]),
            seed=int(cfg["seed"]),
            bootstrap_B=int(cfg["backtest"]["bootstrap_B"]),
            test_level=float(cfg["backtest"]["test_level"]),
            regions=int(cfg["backtest"]["regions"]),
            workers=max(1, int(cfg["workers"])),
            raw=cfg,
        )


@dataclass
class RepOutcome:
    rep: int
    reports: Dict[Tuple[ModelId, float], BacktestReport] = field(default_factory=dict)
    exclusions: List[Tuple[ModelId, float, str]] = field(default_factory=list)
    flagged: Dict[Tuple[ModelId, float], int] = field(default_factory=dict)
    paired: Dict[Tuple[ModelId, float, str], Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    bandwidths: Dict[float, Tuple[float, int]] = field(default_factory=dict)


def run_replication(cfg: StudyConfig, rep: int) -> RepOutcome:
    """Simulates path `rep` and backtests every (model, alpha) stream on it."""
    config = cfg.raw
    path = simulate_scenario(config, cfg.seed, stream=rep)
    series = path_losses(path)
    context = ForecastContext(series, cfg.window, config, truth=path)
    outcome = RepOutcome(rep=rep)

    for mi, model in enumerate(cfg.models):
        for ai, alpha in enumerate(cfg.alphas):
            key = (model, alpha)
            try:
                forecasts = rolling_forecast(series, model, alpha, cfg.window, config, path, context)
                records = forecasts.records
                outcome.flagged[key] = sum(1 for r in records if r.flags)
                if any(NO_FORECAST in r.flags for r in records):
                    n_missing = sum(1 for r in records if NO_FORECAST in r.flags)
                    outcome.exclusions.append((model, alpha, f"no forecast on {n_missing} windows"))
                    continue

                t = np.array([r.t for r in records])
                losses = np.array([r.realized_loss for r in records])
                var = np.array([r.var for r in records])
                es = np.array([r.es for r in records]) if model.has_es else None
                sigma = np.array([r.sigma for r in records]) if records[0].sigma is not None else None
                true_var, true_es = context.true_values(alpha)
                report = backtest_forecasts(model, alpha, losses, var, es=es, sigma=sigma,
                                            true_var=true_var[t], true_es=true_es[t],
                                            B=cfg.bootstrap_B, seed=cfg.seed, stream=(rep, mi, ai))
                outcome.reports[key] = report
                outcome.paired[(model, alpha, "var")] = (var, true_var[t])
                if es is not None:
                    outcome.paired[(model, alpha, "es")] = (es, true_es[t])
            except TailRiskError as e:
                log.warning(f"Replication {rep} {model} alpha={alpha} excluded: {e}")
                outcome.exclusions.append((model, alpha, str(e)))

    for alpha, hs in context.bandwidths_used.items():
        outcome.bandwidths[alpha] = (float(np.mean(hs)), len(hs))
    return outcome


def _run_indexed(args):
    cfg, rep = args
    return run_replication(cfg, rep)


@dataclass
class StudyReport:
    scenario: GammaSpec
    rejections: pd.DataFrame
    rmse: pd.DataFrame
    region_errors: pd.DataFrame
    exclusions: pd.DataFrame
    nonconvergence: pd.DataFrame
    bandwidth_diagnostics: pd.DataFrame
    outcomes: List[RepOutcome] = field(repr=False, default_factory=list)

    def rejection_pct(self, model, alpha, test):
        rows = self.rejections
        match = rows[(rows["model"] == str(model)) & (rows["alpha"] == alpha) & (rows["test"] == test)]
        return float(match["pct"].iloc[0]) if len(match) else float("nan")

    def mean_rmse(self, model, alpha, measure="rmse_var"):
        rows = self.rmse[(self.rmse["model"] == str(model)) & (self.rmse["alpha"] == alpha)]
        return float(rows[measure].mean())

    def write(self, out_dir):
        out_dir = Path(out_dir)
        return [
            write_frame(self.rejections, out_dir / "rejections.csv", REJECTION_COLUMNS),
            write_frame(self.rmse, out_dir / "rmse.csv", RMSE_COLUMNS),
            write_frame(self.region_errors, out_dir / "region_errors.csv", REGION_COLUMNS),
            write_frame(self.exclusions, out_dir / "exclusions.csv", EXCLUSION_COLUMNS),
            write_frame(self.nonconvergence, out_dir / "nonconvergence.csv", NONCONVERGENCE_COLUMNS),
            write_frame(self.bandwidth_diagnostics, out_dir / "bandwidth_diagnostics.csv", BANDWIDTH_COLUMNS),
        ]


def summarize(cfg: StudyConfig, outcomes: List[RepOutcome]) -> StudyReport:
    rejections, rmse_rows, region_rows, exclusion_rows, nonconvergence_rows, bandwidth_rows = [], [], [], [], [], []

    for model in cfg.models:
        for alpha in cfg.alphas:
            key = (model, alpha)
            reports = [o.reports[key] for o in outcomes if key in o.reports]
            tests = TESTS if model.has_es else TESTS[:2]
            for test in tests:
                rejected = sum(r.rejected(cfg.test_level)[test] for r in reports)
                completed = len(reports)
                rejections.append({
                    "scenario": str(cfg.scenario), "model": str(model), "alpha": alpha, "test": test,
                    "rejections": rejected, "completed": completed,
                    "pct": 100.0 * rejected / completed if completed else float("nan"),
                })
            nonconvergence_rows.append({"model": str(model), "alpha": alpha,
                                        "windows_flagged": sum(o.flagged.get(key, 0) for o in outcomes)})

            for measure in ("var", "es"):
                pairs = [o.paired[(model, alpha, measure)] for o in outcomes if (model, alpha, measure) in o.paired]
                if not pairs:
                    continue
                try:
                    summary = region_errors(np.concatenate([p[0] for p in pairs]),
                                            np.concatenate([p[1] for p in pairs]), cfg.regions)
                except TailRiskError as e:
                    log.warning(f"No region errors for {model} alpha={alpha} {measure}: {e}")
                    continue
                for j in range(cfg.regions):
                    region_rows.append({
                        "model": str(model), "alpha": alpha, "measure": measure, "region": j + 1,
                        "lower": summary.lower[j], "upper": summary.upper[j], "count": int(summary.counts[j]),
                        "bias": summary.bias[j], "variance": summary.variance[j],
                    })

    for o in outcomes:
        for (model, alpha), r in o.reports.items():
            rmse_rows.append({"rep": o.rep, "model": str(model), "alpha": alpha,
                              "rmse_var": r.rmse_var, "rmse_es": r.rmse_es})
        for model, alpha, reason in o.exclusions:
            exclusion_rows.append({"rep": o.rep, "model": str(model), "alpha": alpha, "reason": reason})

    for alpha in cfg.alphas:
        used = [o.bandwidths[alpha] for o in outcomes if alpha in o.bandwidths]
        h_mean = sum(h * n for h, n in used) / sum(n for _, n in used) if used else None
        ref = reference_bandwidths(cfg.window - 1, 1.0 - alpha, h_mean=h_mean)
        bandwidth_rows.append({"alpha": alpha, "llqar_h_mean": h_mean, "hall_sheather": ref["hall_sheather"],
                               "bofinger": ref["bofinger"], "yu_jones": ref.get("yu_jones")})

    return StudyReport(
        scenario=cfg.scenario,
        rejections=pd.DataFrame(rejections, columns=REJECTION_COLUMNS),
        rmse=pd.DataFrame(rmse_rows, columns=RMSE_COLUMNS),
        region_errors=pd.DataFrame(region_rows, columns=REGION_COLUMNS),
        exclusions=pd.DataFrame(exclusion_rows, columns=EXCLUSION_COLUMNS),
        nonconvergence=pd.DataFrame(nonconvergence_rows, columns=NONCONVERGENCE_COLUMNS),
        bandwidth_diagnostics=pd.DataFrame(bandwidth_rows, columns=BANDWIDTH_COLUMNS),
        outcomes=outcomes,
    )


class MonteCarloStudyProcedure:
    """
    Study driver.
    3 sections - startup, execute, shutdown.
    """

    def __init__(self, cfg: StudyConfig, listener=None):
        self.cfg = cfg
        self.listener = listener
        self.outcomes = []
        self._last_reported = -10

    def emit(self, kind, payload):
        if kind == "progress" and payload >= self._last_reported + 10:
            self._last_reported = payload - payload % 10
            log.info(f"Monte Carlo study {payload:.0f}% complete.")
        if self.listener is not None:
            self.listener(kind, payload)

    def startup(self):
        cfg = self.cfg
        log.info(f"Monte Carlo study: scenario {cfg.scenario}, {cfg.n_reps} reps of {cfg.n_obs} observations, "
                 f"window {cfg.window}, {len(cfg.models)} models, {cfg.workers} workers.")

    def _completed(self, outcome):
        self.outcomes.append(outcome)
        self.emit("results", outcome)
        self.emit("progress", 100.0 * len(self.outcomes) / self.cfg.n_reps)

    def execute(self):
        cfg = self.cfg
        if cfg.workers == 1:
            for rep in range(cfg.n_reps):
                self._completed(run_replication(cfg, rep))
            return
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for outcome in pool.map(_run_indexed, [(cfg, rep) for rep in range(cfg.n_reps)]):
                self._completed(outcome)

    def shutdown(self):
        excluded = sum(len(o.exclusions) for o in self.outcomes)
        if excluded:
            log.warning(f"{excluded} (rep, model, alpha) streams were excluded.")
        log.info(f"Completed {len(self.outcomes)} replications.")

    def run(self) -> StudyReport:
        self.startup()
        self.execute()
        self.shutdown()
        return summarize(self.cfg, self.outcomes)


def run_mc_study(cfg) -> StudyReport:
    if not isinstance(cfg, StudyConfig):
        cfg = StudyConfig.from_dict(cfg)
    return MonteCarloStudyProcedure(cfg).run()
