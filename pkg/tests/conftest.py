import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rotgpe.grid import GridSpec, random_smooth_field

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def small_grid():
    return GridSpec(10.0, 128)


@pytest.fixture
def ref_grid():
    return GridSpec(12.0, 256)


def rand_field(seed, grid=None, degree=3, width=1.0):
    grid = grid or GridSpec(10.0, 128)
    return random_smooth_field(grid, np.random.default_rng(seed), degree=degree, width=width)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    from _acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
