import numpy as np
import pytest

from sgslice.benchmark import benchmark_context

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def bench_ctx():
    return benchmark_context()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
