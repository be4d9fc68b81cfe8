import numpy as np
import pytest

from backflow.config import DEFAULT_TOLERANCES
from backflow.dynamics import TimeGrid, model_eternal


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def eternal():
    return model_eternal()


@pytest.fixture
def eternal_grid():
    """Step 0.01 on [0.1, 3]."""
    return TimeGrid(0.1, 3.0, 291)


@pytest.fixture
def fast_tol():
    return DEFAULT_TOLERANCES.replace(n_samples=50)
