"""
Command-line entry point.

    ingest     prices CSV -> losses.csv + summary.csv
    forecast   losses CSV -> rolling VaR / ES forecasts
    backtest   forecasts CSV -> coverage, ES bootstrap and V-measure results
    simulate   one eGARCH-t path with its true VaR / ES
    mc-study   the Monte Carlo study
    report     forecasts + backtests -> comparison tables

Any configuration key can be overridden after the positional arguments
with `--dot.path value`, e.g. `--llqar.bandwidth_rule QCV`.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import logging
import sys
from pathlib import Path

from enums.models import ModelId
from enums.scenarios import GammaSpec
from experiments.mc_study import StudyConfig, run_mc_study
from experiments.report import backtest_series, write_backtest_csv, write_report
from experiments.rolling_forecast import RollingForecastProcedure, read_forecast_csv, write_forecast_csv
from experiments.simulate import simulate_scenario, write_simpath_csv
from experiments.window_models import NO_FORECAST
from helpers.common import MIN_BOOTSTRAP
from helpers.config import load_config
from helpers.csv_io import read_losses_csv, write_losses_csv, write_summary_csv
from helpers.errors import DataError, NumericalError, UsageError
from market.market_data import log_losses, parse_price_csv, summary_stats

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

_console_handler = None


class CliParser(argparse.ArgumentParser):
    """Usage errors raise UsageError instead of exiting, so cli_main owns the exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def configure_logging(level):
    global _console_handler
    root = logging.getLogger("")
    if _console_handler is not None:
        root.removeHandler(_console_handler)
    _console_handler = logging.StreamHandler(sys.stderr)
    _console_handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root.addHandler(_console_handler)
    root.setLevel(level)


def parse_overrides(tokens):
    """['--a.b', '1', '--c=2'] -> [('a.b', '1'), ('c', '2')]"""
    pairs = []
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--") or len(token) == 2:
            raise UsageError(f"unexpected argument {token!r}")
        if "=" in token:
            key, value = token[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise UsageError(f"override {token} needs a value")
            key, value = token[2:], tokens[i + 1]
            i += 2
        pairs.append((key, value))
    return pairs


def build_parser():
    # accepted before or after the command; SUPPRESS stops a command from resetting the top-level value
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="YAML or JSON configuration file")
    common.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help="debug logging")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="warnings and errors only")

    parser = CliParser(prog="tailrisk", description="VaR / ES forecasting, backtesting and simulation study.",
                       parents=[common])
    parser.set_defaults(config=None, verbose=False, quiet=False)
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)

    ingest = commands.add_parser("ingest", parents=[common], help="price CSV to log losses and summary statistics")
    ingest.add_argument("prices", type=Path)
    ingest.add_argument("--out-dir", type=Path, default=Path("."))

    forecast = commands.add_parser("forecast", parents=[common], help="rolling one-step VaR / ES forecasts")
    forecast.add_argument("losses", type=Path)
    forecast.add_argument("--model", action="append", choices=ModelId.choices(),
                          help="repeat for several models (default: configured models)")
    forecast.add_argument("--alpha", action="append", type=float, help="tail probability, repeatable")
    forecast.add_argument("--window", type=int)
    forecast.add_argument("--out", type=Path, default=Path("forecasts.csv"))

    backtest = commands.add_parser("backtest", parents=[common], help="coverage and ES tests of a forecast file")
    backtest.add_argument("forecasts", type=Path)
    backtest.add_argument("--bootstrap", type=int, help="bootstrap resamples (default from config)")
    backtest.add_argument("--seed", type=int)
    backtest.add_argument("--out", type=Path, default=Path("backtest.csv"))

    simulate = commands.add_parser("simulate", parents=[common], help="simulate one eGARCH-t path")
    simulate.add_argument("--scenario", choices=GammaSpec.choices())
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--stream", type=int, default=0)
    simulate.add_argument("--n", type=int, help="number of observations (default n_obs)")
    simulate.add_argument("--out", type=Path, default=Path("simpath.csv"))

    study = commands.add_parser("mc-study", parents=[common], help="Monte Carlo study")
    study.add_argument("--preset", help="named preset from the configuration")
    study.add_argument("--workers", type=int)
    study.add_argument("--out-dir", type=Path, default=Path("study"))

    report = commands.add_parser("report", parents=[common], help="join forecast and backtest files")
    report.add_argument("forecasts", type=Path)
    report.add_argument("backtests", type=Path)
    report.add_argument("--out-dir", type=Path, default=Path("report"))
    return parser


def run_ingest(args, config):
    with args.prices.open(encoding="utf-8") as fh:
        prices = parse_price_csv(fh)
    losses = log_losses(prices)
    write_losses_csv(losses, args.out_dir / "losses.csv")
    write_summary_csv(summary_stats(losses), args.out_dir / "summary.csv")
    return EXIT_OK


def run_forecast(args, config):
    series = read_losses_csv(args.losses)
    models = args.model or [m for m in config["models"] if ModelId.parse(m) != ModelId.ORACLE]
    alphas = args.alpha or config["alphas"]
    W = args.window or config["window"]
    forecasts = RollingForecastProcedure(series, models, alphas, W, config).run()
    write_forecast_csv(forecasts, args.out)
    missing = sum(1 for r in forecasts.records if NO_FORECAST in r.flags)
    if missing:
        log.error(f"{missing} forecast rows have no forecast; see the flags column of {args.out}.")
        return EXIT_NUMERICAL
    return EXIT_OK


def run_backtest(args, config):
    forecasts = read_forecast_csv(args.forecasts)
    B = config["backtest"]["bootstrap_B"] if args.bootstrap is None else args.bootstrap
    if B < MIN_BOOTSTRAP:
        raise UsageError(f"--bootstrap must be at least {MIN_BOOTSTRAP}, got {B}")
    seed = config["seed"] if args.seed is None else args.seed
    reports = backtest_series(forecasts, B=B, seed=seed)
    write_backtest_csv(reports, args.out)
    for r in reports:
        log.info(f"{r.model} alpha={r.alpha_tail}: {r.x}/{r.n} violations, UC p={r.uc_p:.4f}, CC p={r.cc_p:.4f}")
    return EXIT_OK


def run_simulate(args, config):
    if args.scenario:
        config["scenario"] = args.scenario
    if args.n:
        config["n_obs"] = args.n
    seed = config["seed"] if args.seed is None else args.seed
    write_simpath_csv(simulate_scenario(config, seed, stream=args.stream), args.out)
    return EXIT_OK


def run_study(args, config):
    if args.workers:
        config["workers"] = args.workers
    report = run_mc_study(StudyConfig.from_dict(config))
    report.write(args.out_dir)
    return EXIT_OK


def run_report(args, config):
    write_report(args.forecasts, args.backtests, args.out_dir)
    return EXIT_OK


COMMANDS = {
    "ingest": run_ingest,
    "forecast": run_forecast,
    "backtest": run_backtest,
    "simulate": run_simulate,
    "mc-study": run_study,
    "report": run_report,
}


def cli_main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args, extra = build_parser().parse_known_args(argv)
        args.overrides = parse_overrides(extra)
        if getattr(args, "preset", None):
            args.overrides.append(("preset", args.preset))
        configure_logging(logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO)
        config = load_config(args.config, args.overrides)
        return COMMANDS[args.command](args, config)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, OSError) as e:
        log.error(f"Data error: {e}")
        return EXIT_DATA
    except (NumericalError, ArithmeticError) as e:
        log.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(cli_main())
