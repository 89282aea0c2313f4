import numpy as np
import pytest

from rshock.torus import PeriodicGrid, QuasiPeriodicConvex, ScalarField


@pytest.fixture
def grid256():
    return PeriodicGrid(1, 256)


@pytest.fixture
def quad256(grid256):
    return QuasiPeriodicConvex(ScalarField(grid256, np.zeros(256)))


def cosine_field(grid, a=1.0, k=1):
    x = grid.axis_coords()
    return ScalarField(grid, a * np.cos(2 * np.pi * k * x))


def random_convex(grid, rng, amp=0.004, modes=5):
    """Random smooth convex member via the hull of a random trigonometric field."""
    from rshock.legendre import convexify

    x = grid.axis_coords()
    a = rng.normal(size=modes) * amp
    b = rng.normal(size=modes) * amp
    w = sum(
        a[i] * np.cos(2 * np.pi * (i + 1) * x) + b[i] * np.sin(2 * np.pi * (i + 1) * x)
        for i in range(modes)
    )
    return convexify(ScalarField(grid, w))
