import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wavechaos.wavelet import default_cdf97

# first call into a jitted kernel pays compile time; hypothesis must not
# count that against its per-example deadline
settings.register_profile(
    "wavechaos",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("wavechaos")


@pytest.fixture(scope="session")
def bank():
    return default_cdf97()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
