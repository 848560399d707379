"""
Study configuration: defaults, YAML / JSON files, presets and dot-path
overrides from the command line.
"""
import copy
import logging
from pathlib import Path

import yaml

from helpers.common import MIN_BOOTSTRAP
from helpers.errors import UsageError

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

DEFAULT_CONFIG = {
    "seed": 20240101,
    "n_obs": 1000,
    "n_reps": 100,
    "window": 250,
    "alphas": [0.05, 0.01],
    "models": ["nGARCH", "tGARCH", "DFGARCH", "gpdNGARCH", "gpdTGARCH", "QAR1", "LLQAR", "Oracle"],
    "scenario": "Constant",
    "workers": 1,
    "egarch": {"omega": -0.40, "alpha": -0.09, "gamma_coef": 0.16, "beta": 0.96, "nu": 6.0},
    "gamma": {
        "step_breaks": [0.4, 0.7],
        "step_levels": [1.0, 1.5, 0.75],
        "smooth_amplitude": 0.5,
        "smooth_period": 500.0,
    },
    "evt": {"threshold_prob": 0.90},
    "caviar": {"starts": 25, "G": 10.0},
    "llqar": {
        "bandwidth_rule": "RuleOfThumbIQR",
        "fixed_h": None,
        "es_sublevels": 20,
        "qcv_grid": None,
    },
    "backtest": {"bootstrap_B": 1000, "test_level": 0.05, "regions": 5},
    "presets": {
        "desk": {"n_reps": 20},
        "full": {"n_reps": 100},
    },
}


def deep_merge(base, update):
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def validate_config(cfg):
    unknown = set(cfg) - set(DEFAULT_CONFIG) - {"preset"}
    if unknown:
        raise UsageError(f"unknown configuration keys: {sorted(unknown)}")
    for block, defaults in DEFAULT_CONFIG.items():
        if isinstance(defaults, dict) and block != "presets":
            if not isinstance(cfg[block], dict):
                raise UsageError(f"{block} must be a mapping")
            unknown = set(cfg[block]) - set(defaults)
            if unknown:
                raise UsageError(f"unknown keys in {block}: {sorted(unknown)}")
    if not cfg["n_obs"] > cfg["window"]:
        raise UsageError(f"n_obs ({cfg['n_obs']}) must exceed window ({cfg['window']})")
    if cfg["n_reps"] < 1:
        raise UsageError("n_reps must be at least 1")
    if cfg["window"] < 10:
        raise UsageError("window must be at least 10")
    for a in cfg["alphas"]:
        if not 0 < float(a) < 0.5:
            raise UsageError(f"tail levels must lie in (0, 0.5), got {a}")
    if int(cfg["llqar"]["es_sublevels"]) < 5:
        raise UsageError("llqar.es_sublevels must be at least 5")
    if cfg["llqar"]["bandwidth_rule"] == "Fixed" and not cfg["llqar"].get("fixed_h"):
        raise UsageError("llqar.bandwidth_rule Fixed needs llqar.fixed_h")
    if int(cfg["backtest"]["bootstrap_B"]) < MIN_BOOTSTRAP:
        raise UsageError(f"backtest.bootstrap_B must be at least {MIN_BOOTSTRAP}")
    return cfg


def resolve(cfg):
    """Applies the named preset, if any, then validates."""
    preset = cfg.get("preset")
    if preset:
        if preset not in cfg["presets"]:
            raise UsageError(f"unknown preset {preset!r}; choose from {sorted(cfg['presets'])}")
        cfg = deep_merge(cfg, cfg["presets"][preset])
    return validate_config(cfg)


def load_config(path=None, overrides=()):
    """Defaults, then the file (YAML or JSON), then dot-path overrides."""
    cfg = DEFAULT_CONFIG
    if path is not None:
        path = Path(path)
        try:
            with path.open(encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except OSError as e:
            raise UsageError(f"cannot read config {path}: {e}")
        except yaml.YAMLError as e:
            raise UsageError(f"config {path} is not valid YAML/JSON: {e}")
        if not isinstance(loaded, dict):
            raise UsageError(f"config {path} must hold a mapping at the top level")
        cfg = deep_merge(cfg, loaded)
        log.info(f"Loaded configuration from {path}.")
    cfg = apply_overrides(cfg, overrides)
    return resolve(cfg)


def apply_overrides(cfg, pairs):
    """
    pairs are (dot.path, text) tuples; text is parsed as YAML so that numbers,
    lists and booleans keep their types.
    """
    cfg = copy.deepcopy(cfg)
    for key, text in pairs:
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise UsageError(f"override {key!r} does not name a configuration block")
            node = node[part]
        if parts[-1] not in node and parts[0] != "presets" and key != "preset":
            raise UsageError(f"unknown configuration key {key!r}")
        node[parts[-1]] = yaml.safe_load(text) if isinstance(text, str) else text
    return cfg
