import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tvlob.market_model import Constant, MarketParams, Sinusoid, TimeGrid

# fixtures here are immutable, so sharing them across examples is safe
settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture
def ref_params():
    """rho = 1 and lam(t) = 4 + cos(2 pi t) on [0, 1]."""
    return MarketParams(Sinusoid(4.0, 1.0, 2 * np.pi), Constant(1.0), 1.0)


@pytest.fixture
def flat_params():
    return MarketParams(Constant(2.0), Constant(1.5), 1.0)


@pytest.fixture
def ref_grid():
    return TimeGrid.regular(1.0, 20)


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines = []
    request.config._acceptance_lines = lines
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
