import numpy as np
import pytest

from nlcalc.discretization import build_uniform_grid

UNIT_CUBE = [[0.0, 1.0]] * 3


@pytest.fixture(scope="session")
def grid3():
    """27 nodes, spacing 1/3; the horizon reaches face and edge neighbors."""
    return build_uniform_grid(UNIT_CUBE, 1.0 / 3.0, 0.5)


@pytest.fixture(scope="session")
def grid4():
    """64 nodes, spacing 0.25; no lattice distance equals the horizon."""
    return build_uniform_grid(UNIT_CUBE, 0.25, 0.45)


@pytest.fixture(scope="session")
def grid5():
    """125 nodes, spacing 0.2, horizon 1.8 spacings."""
    return build_uniform_grid(UNIT_CUBE, 0.2, 0.36)


@pytest.fixture(scope="session")
def line4():
    return build_uniform_grid([[0.0, 1.0]], 0.25, 0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
