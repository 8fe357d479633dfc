import numpy as np
import pytest

from gdnls.spectral import random_field

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_field(rng):
    def make(num_modes=16, band=None, decay=1.0, scale=1.0):
        return random_field(rng, num_modes, band=band, decay=decay, scale=scale)

    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
