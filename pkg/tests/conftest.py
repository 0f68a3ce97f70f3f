import numpy as np
import pytest

from dpfl.core import load_dataset

# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def d5():
    return load_dataset([-1, -0.5, 0, 0.5, 1], 2.0)


@pytest.fixture
def stacked():
    return load_dataset([0, 0, 0, 0, 0], 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
