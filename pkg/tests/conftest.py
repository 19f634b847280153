import numpy as np
import pytest

from nafdm.modem import constellation


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_qpsk(rng, n, frames=None):
    shape = (n,) if frames is None else (frames, n)
    return constellation(4).points[rng.integers(0, 4, shape)]


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
