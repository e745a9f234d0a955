"""System state and the algebraic structure of the viscoelastic model.

The state is ``(t, rho, u, E)``: density, velocity, and the deformation
perturbation ``E = F - I`` where ``F`` is the local deformation tensor.
This module owns

* the barotropic pressure law ``P(rho) = A rho^gamma`` and the associated
  convex potential that enters the energy ledger,
* the structural-identity kernels evaluated pointwise from a state: the
  transpose-divergence constraint ``c_i = d_j(rho F_ji)``, its expanded
  log-density-gradient form, the rank-3 curl compatibility residual of the
  deformation field, and the two algebraically equivalent forms of the
  elastic force ``div(rho F F^T)``,
* the parabolic rescaling map of states, and
* constructors for initial data, including a transport-generated pair
  ``(rho, E)`` that satisfies the constraint and the curl identity to
  near machine precision.

Identity kernels deliberately use plain (untruncated) spectral products so
that exact discrete cancellations survive for band-limited inputs; any
dealiasing policy belongs to the time integrator, not to diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import (
    Grid,
    ScalarField,
    TensorField,
    VectorField,
    _lq_of_values,
    div_values,
    grad_values,
    leray_values,
    lq_norm,
)

__all__ = [
    "PressureLaw",
    "State",
    "ConstraintReport",
    "CurlCompatResidual",
    "equilibrium_state",
    "pressure",
    "pressure_potential",
    "deformation_tensor",
    "constraint_div_rhoFT",
    "grad_rho_identity_residual",
    "curl_compat_residual",
    "elastic_force",
    "constraint_report",
    "scale_state",
    "taylor_green_velocity",
    "compatible_density_deformation",
    "initial_state",
]


@dataclass(frozen=True)
class PressureLaw:
    """Barotropic pressure ``P(rho) = a * rho**gamma`` with ``gamma > 1``."""

    a: float = 1.0
    gamma: float = 2.0

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"pressure coefficient must be positive, got {self.a}")
        if not (self.gamma > 1.0 and math.isfinite(self.gamma)):
            raise ValueError(f"adiabatic exponent must exceed 1, got {self.gamma}")


@dataclass(frozen=True)
class State:
    """Instantaneous fields ``(rho, u, E)`` at time ``t`` on one grid."""

    t: float
    rho: ScalarField
    u: VectorField
    E: TensorField

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValueError(f"time must be finite, got {self.t}")
        if not (self.rho.grid == self.u.grid == self.E.grid):
            raise ValueError("state fields must share one grid")

    @property
    def grid(self) -> Grid:
        return self.rho.grid


@dataclass(frozen=True)
class ConstraintReport:
    """L2 sizes of the four structural residuals of a state."""

    div_rhoFT_l2: float
    curl_compat_l2: float
    grad_rho_identity_l2: float
    force_equivalence_l2: float


@dataclass(frozen=True)
class CurlCompatResidual:
    """Rank-3 curl compatibility residual with its L2 and Lq norms.

    ``values[i, j, k]`` is antisymmetric in ``(j, k)`` by construction.
    """

    values: np.ndarray
    l2: float
    lq: float
    q: float


def equilibrium_state(grid: Grid) -> State:
    """Rest state: unit density, zero velocity, undeformed configuration."""
    return State(
        t=0.0,
        rho=ScalarField(grid, np.ones(grid.shape)),
        u=VectorField(grid, np.zeros((grid.dim,) + grid.shape)),
        E=TensorField(grid, np.zeros((grid.dim, grid.dim) + grid.shape)),
    )


def _require_positive(rho: ScalarField) -> np.ndarray:
    if np.min(rho.values) <= 0.0:
        raise ValueError(f"density must be strictly positive, min = {np.min(rho.values)}")
    return rho.values


def pressure(rho: ScalarField, law: PressureLaw) -> ScalarField:
    """Pointwise barotropic pressure ``a * rho**gamma``."""
    vals = _require_positive(rho)
    return ScalarField(rho.grid, law.a * vals**law.gamma)


def pressure_potential(rho: ScalarField, law: PressureLaw) -> ScalarField:
    """Convex potential ``a (rho^gamma - gamma rho + gamma - 1) / (gamma - 1)``.

    Nonnegative, vanishing exactly at ``rho = 1``; its time derivative under
    mass transport produces the ``-P(rho) div u`` work term, which is what
    couples it into the energy ledger.
    """
    vals = _require_positive(rho)
    g = law.gamma
    return ScalarField(rho.grid, law.a * (vals**g - g * vals + g - 1.0) / (g - 1.0))


def deformation_tensor(E: TensorField) -> np.ndarray:
    """Raw array of ``F = I + E``."""
    d = E.grid.dim
    eye = np.eye(d).reshape((d, d) + (1,) * E.grid.dim)
    return E.values + eye


def constraint_div_rhoFT(s: State) -> VectorField:
    """Column-wise divergence ``c_i = d_j (rho F_ji)``.

    Vanishes identically on constraint-compatible states and is transported
    as a conserved density by the flow, for any velocity field.
    """
    rhoFT = s.rho.values * np.swapaxes(deformation_tensor(s.E), 0, 1)
    return VectorField(s.grid, div_values(s.grid, rhoFT))


def grad_rho_identity_residual(s: State) -> VectorField:
    """Expanded form of the constraint:
    ``r_i = d_i rho + rho d_j E_ji + E_ji d_j rho``.

    Agrees with :func:`constraint_div_rhoFT` up to a discrete product-rule
    defect that is at round-off level for resolved fields.
    """
    grho = grad_values(s.grid, s.rho.values)  # [j] = d_j rho
    dE = grad_values(s.grid, s.E.values)  # [a, i, j] = d_a E_ij
    div_cols = np.einsum("jji...->i...", dE)  # d_j E_ji
    coupling = np.einsum("ji...,j...->i...", s.E.values, grho)
    return VectorField(s.grid, grho + s.rho.values * div_cols + coupling)


def curl_compat_residual(E: TensorField, q: float = 4.0) -> CurlCompatResidual:
    """Antisymmetrized curl obstruction of the deformation field.

    Builds ``A_ijk = d_k E_ij + E_lk d_l E_ij`` and returns
    ``R_ijk = A_ijk - A_ikj``, which vanishes exactly when ``I + E`` is a
    Jacobian-type deformation, and is preserved by transport-stretching.
    """
    grid = E.grid
    dE = grad_values(grid, E.values)  # [a, i, j] = d_a E_ij
    # A[i, j, k] = dE[k, i, j] + sum_l E[l, k] dE[l, i, j]
    a = np.moveaxis(dE, 0, 2) + np.einsum("lk...,lij...->ijk...", E.values, dE)
    r = a - np.swapaxes(a, 1, 2)
    return CurlCompatResidual(
        values=r,
        l2=_lq_of_values(grid, r, 2.0),
        lq=_lq_of_values(grid, r, q),
        q=q,
    )


def elastic_force(s: State, mode: str = "full") -> VectorField:
    """Elastic force in one of two algebraically equal forms.

    ``"full"`` is the conservative form ``d_j (rho F_ik F_jk)``;
    ``"reduced"`` is ``rho F_jk d_j E_ik``, the form obtained after
    discharging the transpose-divergence constraint.  They differ exactly
    by ``F_ik c_k``, so on compatible states the two agree.
    """
    f = deformation_tensor(s.E)
    if mode == "full":
        stress = s.rho.values * np.einsum("ik...,jk...->ij...", f, f)
        return VectorField(s.grid, div_values(s.grid, stress))
    if mode == "reduced":
        dE = grad_values(s.grid, s.E.values)  # [a, i, k] = d_a E_ik
        return VectorField(
            s.grid, s.rho.values * np.einsum("jk...,jik...->i...", f, dE)
        )
    raise ValueError(f"mode must be 'full' or 'reduced', got {mode!r}")


def constraint_report(s: State, q: float = 4.0) -> ConstraintReport:
    """Evaluate all four structural residual norms of a state."""
    full = elastic_force(s, "full")
    reduced = elastic_force(s, "reduced")
    return ConstraintReport(
        div_rhoFT_l2=lq_norm(constraint_div_rhoFT(s), 2.0),
        curl_compat_l2=curl_compat_residual(s.E, q).l2,
        grad_rho_identity_l2=lq_norm(grad_rho_identity_residual(s), 2.0),
        force_equivalence_l2=_lq_of_values(s.grid, full.values - reduced.values, 2.0),
    )


def scale_state(s: State, nu: float) -> State:
    """Parabolic rescaling ``(t, x, u) -> (nu^2 t, nu x, u / nu)``.

    Returns the same samples reinterpreted on a box of edge ``nu * L`` at
    time ``nu^2 t``, with velocity divided by ``nu`` and ``rho``, ``E``
    carried over unchanged.  Sample-for-sample this realizes the scaling
    symmetry of the system, and because the dealias mask depends only on
    integer mode indices the discrete operators commute with it too.
    """
    if not (nu > 0.0 and math.isfinite(nu)):
        raise ValueError(f"scaling factor must be positive, got {nu}")
    g = s.grid
    scaled = Grid(dim=g.dim, n=g.n, length=nu * g.length)
    return State(
        t=nu * nu * s.t,
        rho=ScalarField(scaled, s.rho.values),
        u=VectorField(scaled, s.u.values / nu),
        E=TensorField(scaled, s.E.values),
    )


# ---------------------------------------------------------------------------
# Initial data.
# ---------------------------------------------------------------------------


def taylor_green_velocity(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """Classical cellular vortex velocity (divergence-free).

    In 2-D this is an eigenfunction of the Laplacian whose self-advection is
    a pure gradient, so under projected dynamics with ``rho = 1``, ``E = 0``
    each mode decays by the exact viscous factor.
    """
    x = grid.coordinates()
    vals = np.zeros((grid.dim,) + grid.shape)
    if grid.dim == 2:
        vals[0] = np.sin(x[0]) * np.cos(x[1])
        vals[1] = -np.cos(x[0]) * np.sin(x[1])
    else:
        vals[0] = np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2])
        vals[1] = -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2])
    return VectorField(grid, amplitude * vals)


def _synthetic_velocity(grid: Grid, delta: float, seed: int) -> np.ndarray:
    """Seeded band-limited velocity with a genuinely compressible part.

    A handful of low modes (``|m| <= 2`` per axis) with random directions and
    phases; directions are nudged toward their wavevector so the divergence
    does not accidentally vanish.  Used only to drive the transport generator
    below: a solenoidal field would leave the density at its rest value.
    """
    rng = np.random.default_rng(seed)
    x = grid.coordinates()
    vals = np.zeros((grid.dim,) + grid.shape)
    n_modes = 4
    for _ in range(n_modes):
        while True:
            m = rng.integers(-2, 3, size=grid.dim)
            if np.any(m != 0):
                break
        direction = rng.normal(size=grid.dim)
        direction /= np.linalg.norm(direction)
        mhat = m / np.linalg.norm(m)
        if abs(direction @ mhat) < 0.3:
            direction = direction + 0.5 * mhat  # guarantee a compressible part
            direction /= np.linalg.norm(direction)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        amp = delta * rng.uniform(0.5, 1.0) / n_modes
        theta = sum((2.0 * np.pi / grid.length) * m[a] * x[a] for a in range(grid.dim))
        wave = np.cos(theta + phase)
        for i in range(grid.dim):
            vals[i] += amp * direction[i] * wave
    return vals


@lru_cache(maxsize=16)
def compatible_density_deformation(
    grid: Grid, delta: float, seed: int = 0
) -> tuple[ScalarField, TensorField]:
    """Constraint-compatible, curl-compatible data ``(rho, E)`` near rest.

    Integrates the exact transport laws

    ``d rho / dt = -div(rho w)``,  ``d E / dt = -(w . grad) E + (grad w)(I + E)``

    from ``(rho, E) = (1, 0)`` along a frozen synthetic velocity ``w`` of
    amplitude ``delta`` for a fixed window, with classical RK4.  Both the
    transpose-divergence constraint and the curl identity are conserved by
    these laws for *any* velocity (the derivations never use ``div w = 0``),
    and start at exactly zero, so the output satisfies them up to the tiny
    RK4 time-integration error.  The velocity is deliberately compressible:
    that is what moves the density off its rest value.

    Results are cached per ``(grid, delta, seed)``.
    """
    w = _synthetic_velocity(grid, delta, seed)
    gw = np.swapaxes(grad_values(grid, w), 0, 1)  # [i, j] = d_j w_i
    eye = np.eye(grid.dim).reshape((grid.dim, grid.dim) + (1,) * grid.dim)

    def rhs(rho: np.ndarray, e: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        drho = -div_values(grid, rho * w)
        de_adv = np.einsum("k...,kij...->ij...", w, grad_values(grid, e))
        de_stretch = np.einsum("ik...,kj...->ij...", gw, e + eye)
        return drho, de_stretch - de_adv

    rho = np.ones(grid.shape)
    e = np.zeros((grid.dim, grid.dim) + grid.shape)
    window, n_steps = 0.5, 256
    dt = window / n_steps
    for _ in range(n_steps):
        k1r, k1e = rhs(rho, e)
        k2r, k2e = rhs(rho + 0.5 * dt * k1r, e + 0.5 * dt * k1e)
        k3r, k3e = rhs(rho + 0.5 * dt * k2r, e + 0.5 * dt * k2e)
        k4r, k4e = rhs(rho + dt * k3r, e + dt * k3e)
        rho = rho + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        e = e + (dt / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
    return ScalarField(grid, rho), TensorField(grid, e)


def initial_state(
    grid: Grid, kind: str, delta: float = 1e-2, seed: int = 0
) -> State:
    """Build one of the named initial conditions.

    ``"equilibrium"``
        Exact rest state.
    ``"taylor_green_perturbed"``
        Cellular vortex velocity at amplitude ``delta`` on top of the
        transport-generated compatible ``(rho, E)`` pair.
    ``"constraint_compatible"``
        The same compatible pair with a projected seeded velocity,
        normalized to peak amplitude ``delta``.
    """
    if kind == "equilibrium":
        return equilibrium_state(grid)
    if kind == "taylor_green_perturbed":
        rho, e = compatible_density_deformation(grid, delta, seed)
        u = VectorField(grid, leray_values(grid, taylor_green_velocity(grid, delta).values))
        return State(t=0.0, rho=rho, u=u, E=e)
    if kind == "constraint_compatible":
        rho, e = compatible_density_deformation(grid, delta, seed)
        raw = leray_values(grid, _synthetic_velocity(grid, delta, seed + 1))
        peak = np.max(np.sqrt(np.sum(raw * raw, axis=0)))
        if peak > 0.0:
            raw = raw * (delta / peak)
        return State(t=0.0, rho=rho, u=VectorField(grid, raw), E=e)
    raise ValueError(
        "kind must be 'equilibrium', 'taylor_green_perturbed', or "
        f"'constraint_compatible', got {kind!r}"
    )
