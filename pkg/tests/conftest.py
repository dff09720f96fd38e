import numpy as np
import pytest

from bottleneck_lab.config import SolverConfig
from bottleneck_lab.prob import as_channel

# acceptance lines collected by test_acceptance, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def fast_cfg():
    return SolverConfig(restarts=8, grid_res=100)


def random_channel(rng, m=3, n=3):
    return as_channel(rng.dirichlet(np.ones(m), size=n).T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
