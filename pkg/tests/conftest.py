import numpy as np
import pytest

from ppstat.geometry import UNIT_SQUARE
from ppstat.intensity import ExponentialGradient


@pytest.fixture
def unit():
    return UNIT_SQUARE


@pytest.fixture
def gradient_intensity():
    return ExponentialGradient(100.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
