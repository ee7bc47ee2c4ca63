import numpy as np
import pytest


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(np.random.Philox(key=20260810))
