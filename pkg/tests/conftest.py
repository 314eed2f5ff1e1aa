import numpy as np
import pytest

from poincare_lab import ScalarField, normalize_density

ACCEPTANCE_LINES: list[str] = []


def random_density(grid, rng):
    return normalize_density(ScalarField(grid, np.exp(rng.standard_normal(grid.shape))))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
