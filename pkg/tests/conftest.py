import numpy as np
import pytest

from wmimo.numerics import complex_normal


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


def random_hermitian(rng, m):
    a = complex_normal(rng, (m, m))
    return a + a.conj().T


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
