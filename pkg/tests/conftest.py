import numpy as np
import pytest

from befp.transform import RadialGrid

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def grid():
    return RadialGrid.uniform(8.0, 4000)


@pytest.fixture(scope="session")
def coarse_grid():
    return RadialGrid.uniform(8.0, 2000)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record():
    """Log one PASS/FAIL line per acceptance criterion."""

    def _record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
