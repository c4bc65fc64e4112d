import math

import numpy as np
import pytest

from kerrcat.hilbert import CatBasis, ModeSpace, diagonalize_kerr_cat


@pytest.fixture(scope="session")
def space8():
    return ModeSpace.from_alpha_sq(8.0)


@pytest.fixture(scope="session")
def spectrum8(space8):
    return diagonalize_kerr_cat(space8, 1.0)


@pytest.fixture(scope="session")
def basis4():
    return CatBasis.build(8.0, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def ket(*amps):
    v = np.asarray(amps, complex)
    return v / np.linalg.norm(v)


PLUS = np.array([1, 1]) / math.sqrt(2)
ZERO = np.array([1.0, 0.0])


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one line per acceptance criterion for the terminal summary."""
    if not hasattr(request.config, "_acceptance_lines"):
        request.config._acceptance_lines = {}
    return request.config._acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
