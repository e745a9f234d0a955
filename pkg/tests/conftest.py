"""Shared fixtures: small grids and reproducible band-limited fields."""

from __future__ import annotations

import numpy as np
import pytest

from vela.grid import Grid, ScalarField, TensorField, VectorField, make_grid


@pytest.fixture(scope="session")
def grid2d() -> Grid:
    return make_grid(dim=2, n=32)

@pytest.fixture(scope="session")
def grid3d() -> Grid:
    return make_grid(dim=3, n=16)


def band_limited(grid: Grid, comp_shape: tuple[int, ...], seed: int, max_mode: int = 3,
                 amplitude: float = 1.0) -> np.ndarray:
    """Random real field with integer modes ``|m| <= max_mode`` per axis.

    Built from explicit cosines so the exact analytic field is known; with
    ``max_mode`` small, products of up to three such fields stay resolved on
    the grid and spectral calculus on them is exact to round-off.
    """
    rng = np.random.default_rng(seed)
    x = grid.coordinates()
    out = np.zeros(comp_shape + grid.shape)
    flat = out.reshape((-1,) + grid.shape)
    for c in range(flat.shape[0]):
        for _ in range(4):
            m = rng.integers(-max_mode, max_mode + 1, size=grid.dim)
            amp = amplitude * rng.uniform(0.3, 1.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            theta = sum(
                (2.0 * np.pi / grid.length) * m[a] * x[a] for a in range(grid.dim)
            )
            flat[c] += amp * np.cos(theta + phase)
    return out


@pytest.fixture()
def smooth_scalar(grid2d: Grid) -> ScalarField:
    return ScalarField(grid2d, band_limited(grid2d, (), seed=11))

@pytest.fixture()
def smooth_vector(grid2d: Grid) -> VectorField:
    return VectorField(grid2d, band_limited(grid2d, (2,), seed=12))

@pytest.fixture()
def smooth_tensor(grid2d: Grid) -> TensorField:
    return TensorField(grid2d, band_limited(grid2d, (2, 2), seed=13))
