import numpy as np
import pytest

from sparsemotion.core import MovementTask


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_task():
    return MovementTask(0.0, 1.0, 1.0)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(k, ok, detail)``; the line is printed at the end of the run."""

    def record(k, ok, detail):
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((k, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
