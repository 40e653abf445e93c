import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trotterlab.spin import SpinSector, build_collective_operators

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_sector():
    return SpinSector(8)


@pytest.fixture(scope="session")
def small_ops(small_sector):
    return build_collective_operators(small_sector)


@pytest.fixture(scope="session")
def mid_sector():
    return SpinSector(32)


@pytest.fixture(scope="session")
def mid_ops(mid_sector):
    return build_collective_operators(mid_sector)


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)
