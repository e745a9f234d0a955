"""Semi-discrete operators and time integration for the coupled system.

The evolved unknowns are ``(rho, u, E)``:

* mass transport in exact flux form,
* momentum with viscous diffusion, barotropic pressure, the conservative
  elastic force ``div(rho F F^T)`` with ``F = I + E``, and (in the
  incompressible mode) the gradient of a solved multiplier,
* transport-stretching of the deformation field.

Spatial discretization is pseudo-spectral; every nonlinear product is
optionally truncated by the two-thirds rule as it is formed.  Advection in
the momentum equation is assembled in conservative form,
``u div(rho u) - div(rho u x u)``, which agrees with ``-rho (u . grad) u``
for resolved fields and makes a manufactured forcing cancel against the
stage operators to round-off.

Time stepping integrates the viscous term exactly through the heat-kernel
factor ``exp(-mu |k|^2 dt)`` and treats everything else explicitly:
``imex1`` is the exponential Euler step, ``imex2`` the exponential Heun
(trapezoidal) step.  The incompressible constraint is enforced by solving
``div((1/rho) grad q) = div w`` with a spectrally preconditioned fixed
point iteration and projecting each stage.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import (
    Grid,
    ScalarField,
    TensorField,
    VectorField,
    dealias_values,
    div_values,
    grad_values,
    invlap_meanzero_values,
    lap_values,
    leray_values,
    to_physical,
    to_spectral,
)
from .state import PressureLaw, State

__all__ = [
    "StepConfig",
    "SystemResidual",
    "SimulationError",
    "DensityError",
    "CflError",
    "PressureIterationError",
    "CflWarning",
    "continuity_rhs",
    "deformation_rhs",
    "momentum_rhs",
    "pressure_solve",
    "step",
    "residual",
]

SCHEMES = ("imex1", "imex2")
MODES = ("incompressible", "compressible")


class SimulationError(RuntimeError):
    """Base class for hard numerical aborts."""

class DensityError(SimulationError):
    """Density lost positivity."""

class CflError(SimulationError):
    """Advective CFL number exceeded the abort threshold."""

class PressureIterationError(SimulationError):
    """The multiplier iteration failed to reach tolerance."""

class CflWarning(RuntimeWarning):
    """Advective CFL number exceeded the warning threshold."""


@dataclass(frozen=True)
class StepConfig:
    """Time-integration parameters.

    ``scheme`` is ``"imex2"`` (exponential Heun, second order) or
    ``"imex1"`` (exponential Euler).  ``use_dealias`` switches two-thirds
    truncation of nonlinear products on or off.  The CFL thresholds gate a
    warning and a hard :class:`CflError`.

    ``evolve_deformation=False`` freezes ``E`` at its initial data and is
    the classical reduction: with ``E = 0`` held fixed the elastic term
    collapses into a density gradient that the multiplier absorbs, leaving
    the density-dependent Navier-Stokes system.
    """

    dt: float
    scheme: str = "imex2"
    mode: str = "incompressible"
    mu: float = 0.1
    law: PressureLaw = PressureLaw()
    pressure_tol: float = 1e-10
    pressure_max_iter: int = 200
    use_dealias: bool = True
    cfl_warn: float = 0.5
    cfl_abort: float = 1.0
    evolve_deformation: bool = True

    def __post_init__(self) -> None:
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise ValueError(f"viscosity must be positive, got {self.mu}")
        if not (0 < self.pressure_tol < 1):
            raise ValueError(f"pressure_tol must lie in (0, 1), got {self.pressure_tol}")
        if self.pressure_max_iter < 1:
            raise ValueError("pressure_max_iter must be at least 1")


@dataclass(frozen=True)
class SystemResidual:
    """Residual triple of the three evolution equations.

    Also doubles as the container for forcing terms: a forcing is exactly
    the residual triple the forced solution must produce.
    """

    continuity: ScalarField
    momentum: VectorField
    deformation: TensorField


Forcing = Callable[[float], SystemResidual]


def _deal(grid: Grid, values: np.ndarray, on: bool) -> np.ndarray:
    return dealias_values(grid, values) if on else values


def _require_positive_density(rho: np.ndarray) -> None:
    m = float(np.min(rho))
    if not (m > 0.0) or not np.isfinite(m):
        raise DensityError(f"density lost positivity (min = {m})")


def _mass_flux_div(grid: Grid, rho: np.ndarray, u: np.ndarray, on: bool) -> np.ndarray:
    """``div(rho u)`` with the product optionally dealiased."""
    return div_values(grid, _deal(grid, rho * u, on))


def _momentum_flux_div(grid: Grid, rho: np.ndarray, u: np.ndarray, on: bool) -> np.ndarray:
    """``div(rho u x u)``, row-wise."""
    flux = _deal(grid, rho * u[:, None] * u[None, :], on)
    return div_values(grid, flux)


def _grad_pressure(grid: Grid, rho: np.ndarray, law: PressureLaw, on: bool) -> np.ndarray:
    return grad_values(grid, _deal(grid, law.a * rho**law.gamma, on))


def _elastic_force(grid: Grid, rho: np.ndarray, e: np.ndarray, eye: np.ndarray, on: bool) -> np.ndarray:
    f = e + eye
    stress = _deal(grid, rho * np.einsum("ik...,jk...->ij...", f, f), on)
    return div_values(grid, stress)


def _velocity_gradient(grid: Grid, u: np.ndarray) -> np.ndarray:
    """``out[i, j] = d u_i / d x_j``."""
    return np.swapaxes(grad_values(grid, u), 0, 1)


def _deformation_terms(
    grid: Grid, u: np.ndarray, gu: np.ndarray, e: np.ndarray, on: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(dealiased stretch, dealiased advection)`` of ``E``."""
    stretch = _deal(grid, np.einsum("ik...,kj...->ij...", gu, e), on)
    adv = _deal(grid, np.einsum("k...,kij...->ij...", u, grad_values(grid, e)), on)
    return stretch, adv


def _eye(grid: Grid) -> np.ndarray:
    return np.eye(grid.dim).reshape((grid.dim, grid.dim) + (1,) * grid.dim)


def pressure_solve(s: State, w: VectorField, cfg: StepConfig) -> ScalarField:
    """Solve ``div((1/rho) grad q) = div w`` for the zero-mean multiplier.

    Splits ``1/rho = beta + alpha`` about the midpoint ``beta`` of its range
    and iterates the spectrally preconditioned fixed point

        ``q <- q - (1/beta) (-lap)^{-1}(g - div((1/rho) grad q))``,

    a contraction with factor ``(max - min) / (max + min) < 1`` of the
    reciprocal density range.  Terminates when the relative residual drops
    below ``cfg.pressure_tol``; raises :class:`PressureIterationError` if
    ``cfg.pressure_max_iter`` iterations do not get there.
    """
    grid = s.grid
    _require_positive_density(s.rho.values)
    on = cfg.use_dealias
    g = div_values(grid, w.values)
    # Project the right-hand side onto the range of the discrete operator:
    # the dealias band (when products are filtered) minus the modes the
    # inverse symbol drops.  Outside that subspace g holds only transform
    # rounding noise inherited from w -- which can sit many orders above
    # the solvable part when w is much larger than its divergence -- and
    # no iterate could ever reduce it.
    keep = grid.inv_k_squared > 0.0
    if on:
        keep = keep & grid.dealias_mask
    g = to_physical(grid, to_spectral(grid, g) * keep)
    g_norm = float(np.sqrt(np.sum(g * g)))
    w_scale = float(np.sqrt(np.sum(w.values * w.values)))
    if g_norm <= 1e-14 * max(1.0, w_scale):
        return ScalarField(grid, np.zeros(grid.shape))

    inv_rho = 1.0 / s.rho.values
    hi, lo = float(np.max(inv_rho)), float(np.min(inv_rho))
    beta = 0.5 * (hi + lo)

    q = np.zeros(grid.shape)
    for _ in range(cfg.pressure_max_iter):
        lq = div_values(grid, _deal(grid, inv_rho * grad_values(grid, q), on))
        res = g - lq
        if float(np.sqrt(np.sum(res * res))) <= cfg.pressure_tol * g_norm:
            return ScalarField(grid, q)
        q = q - invlap_meanzero_values(grid, res) / beta
    raise PressureIterationError(
        f"pressure iteration diverged: no convergence to rel. residual "
        f"{cfg.pressure_tol:g} within {cfg.pressure_max_iter} iterations"
    )


def _stage_rhs(
    s: State, cfg: StepConfig, f: SystemResidual | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, ScalarField]:
    """Instantaneous right-hand sides ``(drho, du, dE)`` plus the multiplier."""
    grid = s.grid
    on = cfg.use_dealias
    rho, u, e = s.rho.values, s.u.values, s.E.values
    _require_positive_density(rho)

    mflux = _mass_flux_div(grid, rho, u, on)
    drho = -mflux
    if f is not None:
        drho = drho + f.continuity.values

    if cfg.evolve_deformation:
        gu = _velocity_gradient(grid, u)
        stretch, adv = _deformation_terms(grid, u, gu, e, on)
        de = gu + stretch - adv
        if f is not None:
            de = de + f.deformation.values
    else:
        de = np.zeros_like(e)

    # Conservative advection: u div(rho u) - div(rho u x u) = -rho (u.grad)u.
    if f is not None:
        adv_corr = _deal(grid, u * (mflux - f.continuity.values), on)
    else:
        adv_corr = _deal(grid, u * mflux, on)
    bracket = (
        adv_corr
        - _momentum_flux_div(grid, rho, u, on)
        + cfg.mu * lap_values(grid, u)
        - _grad_pressure(grid, rho, cfg.law, on)
        + _elastic_force(grid, rho, e, _eye(grid), on)
    )
    if f is not None:
        bracket = bracket + f.momentum.values

    inv_rho = 1.0 / rho
    w = _deal(grid, inv_rho * bracket, on)
    if cfg.mode == "incompressible":
        q = pressure_solve(s, VectorField(grid, w), cfg)
        du = w - _deal(grid, inv_rho * grad_values(grid, q.values), on)
    else:
        q = ScalarField(grid, np.zeros(grid.shape))
        du = w
    return drho, du, de, q


def continuity_rhs(s: State, cfg: StepConfig, forcing: SystemResidual | None = None) -> ScalarField:
    """``- div(rho u)`` (exact flux form, both modes) plus any forcing."""
    drho = -_mass_flux_div(s.grid, s.rho.values, s.u.values, cfg.use_dealias)
    if forcing is not None:
        drho = drho + forcing.continuity.values
    return ScalarField(s.grid, drho)


def deformation_rhs(s: State, cfg: StepConfig, forcing: SystemResidual | None = None) -> TensorField:
    """``grad u + (grad u) E - (u . grad) E`` plus any forcing."""
    gu = _velocity_gradient(s.grid, s.u.values)
    stretch, adv = _deformation_terms(s.grid, s.u.values, gu, s.E.values, cfg.use_dealias)
    de = gu + stretch - adv
    if forcing is not None:
        de = de + forcing.deformation.values
    return TensorField(s.grid, de)


def momentum_rhs(
    s: State, cfg: StepConfig, forcing: SystemResidual | None = None
) -> tuple[VectorField, ScalarField]:
    """Velocity tendency and the multiplier that enforced it.

    Returns ``du = (1/rho)[-rho (u.grad) u + mu lap u - grad P(rho)
    + div(rho F F^T) - grad q]`` (conservatively grouped advection) together
    with the zero-mean multiplier ``q`` (identically zero in the
    compressible mode).
    """
    _, du, _, q = _stage_rhs(s, cfg, forcing)
    return VectorField(s.grid, du), q


def _advective_cfl(s: State, cfg: StepConfig) -> float:
    umax = float(np.max(np.sqrt(np.sum(s.u.values**2, axis=0))))
    return umax * cfg.dt / s.grid.spacing


def step(s: State, cfg: StepConfig, forcing: Forcing | None = None) -> State:
    """Advance one time step with the configured exponential scheme.

    Checks the advective CFL number first (warn above ``cfg.cfl_warn``,
    abort above ``cfg.cfl_abort``) and validates density positivity before
    and after.  In the incompressible mode every velocity stage is
    projected, so divergence cannot accumulate.
    """
    grid = s.grid
    cfl = _advective_cfl(s, cfg)
    if cfl > cfg.cfl_abort:
        raise CflError(f"advective CFL {cfl:.3f} exceeds abort threshold {cfg.cfl_abort}")
    if cfl > cfg.cfl_warn:
        warnings.warn(
            f"advective CFL {cfl:.3f} exceeds {cfg.cfl_warn}; the time step is marginal",
            CflWarning,
            stacklevel=2,
        )

    dt = cfg.dt
    incompressible = cfg.mode == "incompressible"
    efac = np.exp(-cfg.mu * grid.k_squared * dt)

    f1 = forcing(s.t) if forcing is not None else None
    drho1, du1, de1, _ = _stage_rhs(s, cfg, f1)
    u_hat = to_spectral(grid, s.u.values)
    # Nonstiff part of the tendency in spectral space: du - mu lap u.
    n1_hat = to_spectral(grid, du1) + cfg.mu * grid.k_squared * u_hat

    u_pred_hat = efac * (u_hat + dt * n1_hat)
    u_pred = to_physical(grid, u_pred_hat)
    if incompressible:
        u_pred = leray_values(grid, u_pred)
    rho_pred = s.rho.values + dt * drho1
    e_pred = s.E.values + dt * de1
    _require_positive_density(rho_pred)

    if cfg.scheme == "imex1":
        return State(
            t=s.t + dt,
            rho=ScalarField(grid, rho_pred),
            u=VectorField(grid, u_pred),
            E=TensorField(grid, e_pred),
        )

    predictor = State(
        t=s.t + dt,
        rho=ScalarField(grid, rho_pred),
        u=VectorField(grid, u_pred),
        E=TensorField(grid, e_pred),
    )
    f2 = forcing(predictor.t) if forcing is not None else None
    drho2, du2, de2, _ = _stage_rhs(predictor, cfg, f2)
    n2_hat = to_spectral(grid, du2) + cfg.mu * grid.k_squared * to_spectral(grid, predictor.u.values)

    u_new = to_physical(grid, efac * u_hat + 0.5 * dt * (efac * n1_hat + n2_hat))
    if incompressible:
        u_new = leray_values(grid, u_new)
    rho_new = s.rho.values + 0.5 * dt * (drho1 + drho2)
    e_new = s.E.values + 0.5 * dt * (de1 + de2)
    _require_positive_density(rho_new)

    return State(
        t=s.t + dt,
        rho=ScalarField(grid, rho_new),
        u=VectorField(grid, u_new),
        E=TensorField(grid, e_new),
    )


def residual(
    s: State,
    drho: ScalarField,
    du: VectorField,
    de: TensorField,
    cfg: StepConfig,
    *,
    extra_pressure: ScalarField | None = None,
    pressure_force_weight: float = 1.0,
) -> SystemResidual:
    """Apply the full space-time operator to a state and given time derivatives.

    Momentum is evaluated in conservative form.  ``extra_pressure`` adds
    ``grad(extra_pressure)`` to the momentum residual (this is how the
    incompressible multiplier is accounted for when checking identities);
    ``pressure_force_weight`` multiplies both the barotropic pressure
    gradient and the elastic force, which is the coefficient pattern the
    parabolic rescaling produces.
    """
    grid = s.grid
    on = cfg.use_dealias
    rho, u, e = s.rho.values, s.u.values, s.E.values

    cont = drho.values + _mass_flux_div(grid, rho, u, on)

    mom = (
        rho * du.values
        + _deal(grid, u * drho.values, on)
        + _momentum_flux_div(grid, rho, u, on)
        - cfg.mu * lap_values(grid, u)
        + pressure_force_weight * _grad_pressure(grid, rho, cfg.law, on)
        - pressure_force_weight * _elastic_force(grid, rho, e, _eye(grid), on)
    )
    if extra_pressure is not None:
        mom = mom + grad_values(grid, extra_pressure.values)

    gu = _velocity_gradient(grid, u)
    stretch, adv = _deformation_terms(grid, u, gu, e, on)
    defm = de.values + adv - stretch - gu

    return SystemResidual(
        continuity=ScalarField(grid, cont),
        momentum=VectorField(grid, mom),
        deformation=TensorField(grid, defm),
    )
