import numpy as np
import pytest

from helpers.config import DEFAULT_CONFIG, deep_merge


@pytest.fixture
def fast_config():
    """Defaults with fewer CAViaR starts and bootstrap resamples."""
    return deep_merge(DEFAULT_CONFIG, {
        "caviar": {"starts": 3},
        "backtest": {"bootstrap_B": 200},
    })


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
