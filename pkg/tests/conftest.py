import numpy as np
import pytest

from osmoguard import PlantConfig, simulate


@pytest.fixture(scope="session")
def default_run():
    """1000-minute normal run with default parameters."""
    return simulate(PlantConfig(seed=0), 1000)


@pytest.fixture()
def quiet_config():
    """Zero-noise configuration: every channel sits at its operating point."""
    return PlantConfig(
        noise_std={ch: 0.0 for ch in PlantConfig().noise_std},
        seed=0,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
