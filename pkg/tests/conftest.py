import numpy as np
import pytest

from speclab.comparison import CurvatureBound, solve_h


@pytest.fixture(scope="session")
def flat_model():
    """h(t) = t on [0, 3]."""
    return solve_h(CurvatureBound.const(0.0), 3.0)


@pytest.fixture(scope="session")
def sinh_model():
    return solve_h(CurvatureBound.const(1.0), 5.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip(':abc')), s)):
            terminalreporter.write_line(line)
