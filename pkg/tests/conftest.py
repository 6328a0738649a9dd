import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pslab.extremal import family_cone, family_cone_frustrum, family_staircase
from pslab.field import field_from_function

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cone():
    return family_cone(2)


@pytest.fixture(scope="session")
def frustrum():
    return family_cone_frustrum(2, 0.5, 0.5, 0.3, (0.2, 0.0))


@pytest.fixture(scope="session")
def stair():
    return family_staircase(2, [(0.3, 1.0), (0.6, 0.7), (1.0, 0.4)], centers=[0.0, 0.3, 0.6])


@pytest.fixture(scope="session")
def cone_grid():
    return field_from_function(lambda x: np.maximum(1 - np.linalg.norm(x, axis=1), 0.0), [(-2, 2)] * 2, 256)
