"""
Volatility-factor profiles and simulated eGARCH-t paths written to CSV.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from enums.scenarios import GammaSpec
from estimators.egarch import EgarchParams, SimPath, simulate_egarch
from helpers.config import DEFAULT_CONFIG
from helpers.csv_io import SIMPATH_BASE_COLUMNS, write_frame
from helpers.errors import DomainError
from helpers.helper_functions import piecewise_levels
from market.market_data import LogLossSeries

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class GammaProfile:
    spec: GammaSpec
    n: int
    values: np.ndarray


def gamma_profile(spec, n, block=None) -> GammaProfile:
    """
    block is the `gamma` configuration block (step breaks and levels, smooth
    amplitude and period); the defaults apply when it is omitted.
    """
    spec = spec if isinstance(spec, GammaSpec) else GammaSpec.parse(spec)
    if n < 1:
        raise DomainError(f"profile length must be at least 1, got {n}")
    block = DEFAULT_CONFIG["gamma"] if block is None else block

    if spec == GammaSpec.CONSTANT:
        values = np.ones(n)
    elif spec == GammaSpec.STEP:
        values = piecewise_levels(n, block["step_breaks"], block["step_levels"])
    else:
        t = np.arange(n)
        values = 1.0 + block["smooth_amplitude"] * np.sin(2.0 * np.pi * t / block["smooth_period"])

    if np.any(values <= 0):
        raise DomainError(f"{spec} profile must stay positive")
    return GammaProfile(spec=spec, n=n, values=values)


def simulate_scenario(config, seed, stream=0) -> SimPath:
    """One study path: the configured eGARCH parameters under the configured scenario."""
    n = int(config["n_obs"])
    profile = gamma_profile(config["scenario"], n, config["gamma"])
    params = EgarchParams.from_config(config["egarch"])
    alphas = tuple(float(a) for a in config["alphas"])
    return simulate_egarch(params, n, seed, profile, stream=stream, alphas=alphas)


def path_losses(path: SimPath) -> LogLossSeries:
    return LogLossSeries.from_values(path.losses)


def path_to_frame(path: SimPath) -> pd.DataFrame:
    """Columns t, loss, sigma_true, gamma, then var_<alpha> and es_<alpha> per level."""
    frame = pd.DataFrame({
        "t": np.arange(len(path)),
        "loss": path.losses,
        "sigma_true": path.sigma_true,
        "gamma": path.gamma,
    }, columns=SIMPATH_BASE_COLUMNS)
    for a in sorted(path.true_var, reverse=True):
        frame[f"var_{a:g}"] = path.true_var[a]
        frame[f"es_{a:g}"] = path.true_es[a]
    return frame


def write_simpath_csv(path: SimPath, out):
    log.info(f"Writing simulated path of {len(path)} observations.")
    return write_frame(path_to_frame(path), out)
