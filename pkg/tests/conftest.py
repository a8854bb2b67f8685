import numpy as np
import pytest

from eqflow import RealField, make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def grid16():
    return make_grid(16, 16, 1.0, 1.0)


@pytest.fixture
def grid8_2pi():
    return make_grid(8, 8, 2.0 * np.pi, 2.0 * np.pi)


def random_field(grid, rng, scale=1.0, smooth=False):
    """Random field; smooth=True keeps only the lowest third of modes."""
    values = scale * rng.standard_normal(grid.shape)
    if smooth:
        spec = grid.forward(values) * grid.dealias_mask
        values = grid.inverse(spec)
    return RealField(values, grid)
