import numpy as np
import pytest

from sosfocus.geometry import FLAT, LayeredMedium, curvilinear_array


@pytest.fixture(scope="session")
def probe_array():
    """Full curvilinear abdominal probe operated at 3 MHz."""
    return curvilinear_array(192, 350e-6, 60e-3, 3.0e6)


@pytest.fixture(scope="session")
def flat_probe():
    return curvilinear_array(192, 350e-6, FLAT, 3.0e6)


@pytest.fixture(scope="session")
def desk_array():
    """Reduced 64-element probe for end-to-end runs."""
    return curvilinear_array(64, 350e-6, 60e-3, 3.0e6)


@pytest.fixture(scope="session")
def fat_layer():
    return LayeredMedium(20e-3, 1450.0, 1540.0)


@pytest.fixture(scope="session")
def uniform_1540():
    return LayeredMedium.uniform(1540.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
