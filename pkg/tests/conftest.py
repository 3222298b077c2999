"""Shared fixtures and the acceptance summary printed at the end of the run."""
import pytest

ACCEPTANCE_LINES = {}


def record(criterion, passed, detail):
    """Store one acceptance verdict line; printed by the terminal summary."""
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(12345)
