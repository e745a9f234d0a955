"""Periodic spectral substrate: uniform grids, typed fields, Fourier calculus.

All downstream machinery works on a uniform lattice over the periodic box
``[0, L)^d`` (d = 2 or 3) and differentiates in Fourier space via real-to-
complex transforms.  Fields are thin frozen wrappers around float64 arrays
whose trailing ``d`` axes are the spatial axes; vector and tensor components
live on leading axes, so every spectral kernel broadcasts uniformly over
component axes.

Conventions
-----------
* Velocity-gradient indexing is ``(grad u)[i, j] = d u_i / d x_j``.
* Tensor divergence is row-wise: ``(div T)[i] = d_j T[i, j]``.
* ``inverse_laplacian_meanzero`` solves ``-lap(phi) = f`` after discarding
  the mean of ``f`` and returns the zero-mean solution.
* ``dealias`` applies the standard two-thirds truncation (integer modes with
  ``|m| <= n // 3`` on every axis survive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "TensorField",
    "make_grid",
    "gradient",
    "divergence",
    "laplacian",
    "dealias",
    "inverse_laplacian_meanzero",
    "leray_project",
    "integrate",
    "lq_norm",
    "w1q_norm",
    "h1_seminorm_sq",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice with cached spectral metadata.

    Parameters
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    n : int
        Points per axis (even, >= 4).
    length : float
        Box edge length ``L``; the lattice is ``x_m = m L / n``.
    """

    dim: int
    n: int
    length: float

    shape: tuple[int, ...] = field(init=False, repr=False, compare=False)
    spacing: float = field(init=False, repr=False, compare=False)
    cell_volume: float = field(init=False, repr=False, compare=False)
    wavenumbers: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    k_squared: np.ndarray = field(init=False, repr=False, compare=False)
    inv_k_squared: np.ndarray = field(init=False, repr=False, compare=False)
    dealias_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"n must be an even integer >= 4, got {self.n}")
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise ValueError(f"length must be positive and finite, got {self.length}")

        object.__setattr__(self, "shape", (self.n,) * self.dim)
        object.__setattr__(self, "spacing", self.length / self.n)
        object.__setattr__(self, "cell_volume", (self.length / self.n) ** self.dim)

        # Angular wavenumbers per axis, shaped for broadcasting against the
        # trailing spatial axes of spectral arrays (last axis is half-size).
        scale = 2.0 * np.pi / self.length
        ks: list[np.ndarray] = []
        for axis in range(self.dim):
            if axis == self.dim - 1:
                k1 = np.fft.rfftfreq(self.n, d=1.0 / self.n) * scale
            else:
                k1 = np.fft.fftfreq(self.n, d=1.0 / self.n) * scale
            shp = [1] * self.dim
            shp[axis] = k1.size
            ks.append(k1.reshape(shp))

        # The Laplacian keeps the full symbol; first derivatives zero the
        # (self-conjugate) Nyquist mode, which keeps grad exactly adjoint to
        # -div on even grids and the variable-coefficient pressure operator
        # exactly symmetric.  The inverse symbol matches the derivatives, so
        # that inverse_laplacian_meanzero inverts -div(grad(.)) and the Leray
        # projection is exactly divergence-free, mode by mode.
        k2 = sum(k * k for k in ks)
        nyquist = self.n // 2 * scale
        ks = [np.where(np.abs(k) == nyquist, 0.0, k) for k in ks]
        for k in ks:
            k.setflags(write=False)
        object.__setattr__(self, "wavenumbers", tuple(ks))
        k2_deriv = sum(k * k for k in ks)
        inv = np.zeros_like(k2_deriv)
        np.divide(1.0, k2_deriv, out=inv, where=k2_deriv > 0.0)
        k2.setflags(write=False)
        inv.setflags(write=False)
        object.__setattr__(self, "k_squared", k2)
        object.__setattr__(self, "inv_k_squared", inv)

        cut = self.n // 3
        mask = np.ones(k2.shape, dtype=bool)
        for axis in range(self.dim):
            if axis == self.dim - 1:
                m = np.fft.rfftfreq(self.n, d=1.0 / self.n)
            else:
                m = np.fft.fftfreq(self.n, d=1.0 / self.n)
            shp = [1] * self.dim
            shp[axis] = m.size
            mask &= (np.abs(m) <= cut).reshape(shp)
        mask.setflags(write=False)
        object.__setattr__(self, "dealias_mask", mask)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Meshgrid coordinate arrays ``x_0, ..., x_{d-1}`` ('ij' indexing)."""
        axes = [np.arange(self.n) * self.spacing for _ in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @property
    def spatial_axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))


def make_grid(dim: int = 2, n: int = 64, length: float = 2.0 * np.pi) -> Grid:
    """Build a :class:`Grid` (validates ``dim``, ``n``, ``length``)."""
    return Grid(dim=int(dim), n=int(n), length=float(length))


def _coerce(grid: Grid, values: np.ndarray, expected_shape: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != expected_shape:
        raise ValueError(f"{what} values must have shape {expected_shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} values contain non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Scalar sample array on ``grid`` (shape ``grid.shape``)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _coerce(self.grid, self.values, self.grid.shape, "scalar")
        )


@dataclass(frozen=True, eq=False)
class VectorField:
    """Vector samples on ``grid``; ``values[i]`` is component ``i``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.grid.dim,) + self.grid.shape
        object.__setattr__(self, "values", _coerce(self.grid, self.values, shape, "vector"))


@dataclass(frozen=True, eq=False)
class TensorField:
    """Rank-2 tensor samples on ``grid``; ``values[i, j]`` is entry ``(i, j)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.grid.dim, self.grid.dim) + self.grid.shape
        object.__setattr__(self, "values", _coerce(self.grid, self.values, shape, "tensor"))


Field = ScalarField | VectorField | TensorField


# ---------------------------------------------------------------------------
# Raw-array spectral kernels.  These accept arrays whose trailing grid.dim
# axes are spatial; leading component axes broadcast through unchanged.
# ---------------------------------------------------------------------------


def to_spectral(grid: Grid, values: np.ndarray) -> np.ndarray:
    return np.fft.rfftn(values, axes=grid.spatial_axes)

def to_physical(grid: Grid, spec: np.ndarray) -> np.ndarray:
    return np.fft.irfftn(spec, s=grid.shape, axes=grid.spatial_axes)


def deriv_values(grid: Grid, values: np.ndarray, axis: int) -> np.ndarray:
    """Spectral partial derivative along spatial ``axis`` (0-based)."""
    spec = to_spectral(grid, values)
    return to_physical(grid, 1j * grid.wavenumbers[axis] * spec)


def grad_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Stack spectral partials on a new leading axis: ``out[a] = d(values)/dx_a``."""
    spec = to_spectral(grid, values)
    return np.stack(
        [to_physical(grid, 1j * grid.wavenumbers[a] * spec) for a in range(grid.dim)]
    )


def div_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Contract the *last component axis* against the spatial derivatives.

    For a vector array ``(d, *shape)`` this is the usual divergence; for a
    tensor array ``(d, d, *shape)`` it is the row-wise divergence
    ``out[i] = d_j T[i, j]``.
    """
    spec = to_spectral(grid, values)
    comp_axis = values.ndim - grid.dim - 1
    parts = [
        1j * grid.wavenumbers[j] * np.take(spec, j, axis=comp_axis)
        for j in range(grid.dim)
    ]
    return to_physical(grid, sum(parts))


def lap_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    return to_physical(grid, -grid.k_squared * to_spectral(grid, values))


def dealias_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    return to_physical(grid, grid.dealias_mask * to_spectral(grid, values))


def invlap_meanzero_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Solve ``-lap(phi) = values - mean(values)`` with ``mean(phi) = 0``."""
    spec = to_spectral(grid, values)
    return to_physical(grid, grid.inv_k_squared * spec)


def leray_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Project a vector array onto its divergence-free part."""
    spec = to_spectral(grid, values)
    kdotu = sum(grid.wavenumbers[j] * spec[j] for j in range(grid.dim))
    corr = grid.inv_k_squared * kdotu
    return to_physical(
        grid, np.stack([spec[i] - grid.wavenumbers[i] * corr for i in range(grid.dim)])
    )


# ---------------------------------------------------------------------------
# Typed public operations.
# ---------------------------------------------------------------------------


def gradient(f: ScalarField | VectorField) -> VectorField | TensorField:
    """Spectral gradient.

    ``ScalarField -> VectorField`` with ``out[i] = d f / d x_i``;
    ``VectorField -> TensorField`` with ``out[i, j] = d u_i / d x_j``.
    """
    if isinstance(f, ScalarField):
        return VectorField(f.grid, grad_values(f.grid, f.values))
    if isinstance(f, VectorField):
        stacked = grad_values(f.grid, f.values)  # [a, i] = d_a u_i
        return TensorField(f.grid, np.swapaxes(stacked, 0, 1))
    raise TypeError(f"gradient expects a scalar or vector field, got {type(f).__name__}")


def divergence(f: VectorField | TensorField) -> ScalarField | VectorField:
    """Spectral divergence: vector -> scalar, tensor -> row-wise vector."""
    if isinstance(f, VectorField):
        return ScalarField(f.grid, div_values(f.grid, f.values))
    if isinstance(f, TensorField):
        return VectorField(f.grid, div_values(f.grid, f.values))
    raise TypeError(f"divergence expects a vector or tensor field, got {type(f).__name__}")


def laplacian(f: Field) -> Field:
    return type(f)(f.grid, lap_values(f.grid, f.values))


def dealias(f: Field) -> Field:
    """Two-thirds-rule truncation of every component."""
    return type(f)(f.grid, dealias_values(f.grid, f.values))


def inverse_laplacian_meanzero(f: ScalarField | VectorField) -> ScalarField | VectorField:
    """Componentwise ``(-lap)^{-1}`` with the zero-mean convention."""
    return type(f)(f.grid, invlap_meanzero_values(f.grid, f.values))


def leray_project(u: VectorField) -> VectorField:
    """Remove the gradient part of ``u`` (mean flow is kept)."""
    return VectorField(u.grid, leray_values(u.grid, u.values))


# ---------------------------------------------------------------------------
# Quadrature and norms.
# ---------------------------------------------------------------------------


def integrate(f: Field | np.ndarray, grid: Grid | None = None) -> float:
    """Box integral by the (spectrally exact) trapezoidal rule."""
    if isinstance(f, (ScalarField, VectorField, TensorField)):
        grid = f.grid
        arr = f.values
    else:
        if grid is None:
            raise TypeError("integrate needs a grid when given a bare array")
        arr = np.asarray(f)
    return float(np.sum(arr) * grid.cell_volume)


def _pointwise_magnitude(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Euclidean / Frobenius magnitude over all leading component axes."""
    comp_axes = tuple(range(values.ndim - grid.dim))
    if not comp_axes:
        return np.abs(values)
    return np.sqrt(np.sum(values * values, axis=comp_axes))


def _lq_of_values(grid: Grid, values: np.ndarray, q: float) -> float:
    mag = _pointwise_magnitude(grid, values)
    if np.isinf(q):
        return float(np.max(mag))
    if q <= 0:
        raise ValueError(f"norm exponent must be positive, got {q}")
    return float((np.sum(mag**q) * grid.cell_volume) ** (1.0 / q))


def lq_norm(f: Field, q: float = 2.0) -> float:
    """``L^q`` norm of the pointwise magnitude (``q = inf`` gives the sup)."""
    return _lq_of_values(f.grid, f.values, q)


def w1q_norm(f: Field, q: float = 2.0) -> float:
    """Sobolev ``W^{1,q}`` norm: field plus its full (spectral) gradient.

    Uses the ``(|f|_q^q + |grad f|_q^q)^{1/q}`` convention; for ``q = inf``
    it is the max of the two sup norms.
    """
    gvals = grad_values(f.grid, f.values)
    if np.isinf(q):
        return max(_lq_of_values(f.grid, f.values, q), _lq_of_values(f.grid, gvals, q))
    a = _lq_of_values(f.grid, f.values, q)
    b = _lq_of_values(f.grid, gvals, q)
    return float((a**q + b**q) ** (1.0 / q))


def h1_seminorm_sq(f: Field) -> float:
    """Squared ``H^1`` seminorm: box integral of the squared full gradient."""
    gvals = grad_values(f.grid, f.values)
    return float(np.sum(gvals * gvals) * f.grid.cell_volume)
