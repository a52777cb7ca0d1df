import sys

import numpy as np
import pytest

from binaural_interference.filterbank import build_grid
from binaural_interference.model import Simulation


@pytest.fixture(scope="session")
def grid():
    return build_grid(500.0, 5, (67.0, 1000.0))


@pytest.fixture(scope="session")
def sim():
    return Simulation(tokens=100, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in acceptance.CHECKS:
        if key in acceptance.RESULTS:
            terminalreporter.write_line(acceptance.format_line(key))
