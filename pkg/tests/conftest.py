import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from choquard.config import DEFAULT_STRETCH
from choquard.functional import ProblemParams
from choquard.grid import make_grid
from choquard.riesz import build_kernel
from choquard.solver import SolverConfig, ground_state

settings.register_profile(
    "choquard", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("choquard")

# lines reported by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_grid():
    return make_grid(40.0, 4000, DEFAULT_STRETCH)


@pytest.fixture(scope="session")
def default_kernel(default_grid):
    return build_kernel(default_grid, 1.0)


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(12.0, 600)


@pytest.fixture(scope="session")
def small_kernel(small_grid):
    return build_kernel(small_grid, 1.0)


@pytest.fixture(scope="session")
def base_params():
    return ProblemParams(mu=1.0, kappa=1.0, nu=1.0, tau=1.0, zeta=4.5)


@pytest.fixture(scope="session")
def base_solution(base_params, default_kernel):
    return ground_state(base_params, default_kernel, SolverConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
