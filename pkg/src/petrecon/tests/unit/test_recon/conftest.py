import numpy as np
import pytest

from petrecon.acquisition import AcquisitionConfig, simulate_counts


@pytest.fixture
def truth(small_grid):
    """A warm disk on a uniform background."""
    x = np.full(small_grid.shape, 1.0)
    x[:, 2:6, 2:6] = 3.0
    return x


@pytest.fixture
def measurement(small_system, truth):
    """Noisy counts and the means behind them."""
    cfg = AcquisitionConfig(target_true_counts=20_000, background_fraction=0.3, seed=8)
    return simulate_counts(small_system, truth, cfg)
