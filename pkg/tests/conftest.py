import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gaugetomo import MetricField, PolarGrid, fan_beam_grid
from gaugetomo._kernels import available

settings.register_profile("gaugetomo", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gaugetomo")

BACKENDS = available()
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def euclid():
    return MetricField.euclidean()


@pytest.fixture(scope="session")
def bump():
    return MetricField.conformal(0.05, 4.0)


@pytest.fixture(scope="session")
def grid32():
    return PolarGrid(33, 32)


@pytest.fixture(scope="session")
def grid64():
    return PolarGrid(64, 64)


@pytest.fixture(scope="session")
def fan_e(euclid):
    return fan_beam_grid(euclid, 16, 16, "M")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
