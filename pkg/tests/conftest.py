import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from almostrep import fixtures as fx

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def groupoids():
    return fx.groupoid_fixtures()


@pytest.fixture(scope="session")
def reps():
    return fx.rep_fixtures()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
