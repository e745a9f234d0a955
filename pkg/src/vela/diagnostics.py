"""Exact-identity diagnostics evaluated along simulated trajectories.

Every quantity in this module realizes a statement that holds exactly for
smooth solutions of the continuous system -- an energy ledger, a conserved
integral, a transported log-density gradient, or an elliptic/parabolic
reformulation of the momentum balance -- as a grid residual.  On
well-prepared (constraint-compatible, band-limited) states each residual
sits at the discretization floor; deliberately broken states push the
sensitive ones above ``1e-3``, which is what makes them useful as checks
rather than tautologies.

The two reformulation residuals (:func:`z_parabolic_residual`,
:func:`pressure_poisson_residual`) take the velocity tendency and the
pressure multiplier from :func:`vela.dynamics.momentum_rhs` -- the equation
itself, never a finite difference of the trajectory -- so they test spatial
algebra independently of the time scheme.  Their nonlinear terms are grouped
exactly as the momentum assembly groups them, which makes the shared part of
the algebra cancel at machine precision and leaves the genuinely informative
part: the constraint defect.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    DensityError,
    StepConfig,
    _deal,
    _mass_flux_div,
    _momentum_flux_div,
    continuity_rhs,
    deformation_rhs,
    momentum_rhs,
)
from .grid import (
    Grid,
    ScalarField,
    VectorField,
    _lq_of_values,
    div_values,
    grad_values,
    h1_seminorm_sq,
    integrate,
    invlap_meanzero_values,
    lap_values,
    lq_norm,
    w1q_norm,
)
from .state import (
    ConstraintReport,
    PressureLaw,
    State,
    constraint_div_rhoFT,
    constraint_report,
    deformation_tensor,
    pressure,
    pressure_potential,
)

__all__ = [
    "CONSTRAINT_WARN_TOL",
    "ConstraintWarning",
    "DiagnosticsReport",
    "EnergyReport",
    "SigmaState",
    "compute_Z",
    "energy_report",
    "pressure_poisson_residual",
    "report",
    "sigma_consistency",
    "sigma_init",
    "sigma_step",
    "tr_integral",
    "trace_transport_defect",
    "viscous_dissipation_rate",
    "z_parabolic_residual",
]

#: Constraint residual above which the reformulation identities are expected
#: to fail, so the residual functions emit a warning instead of a quiet
#: large number.
CONSTRAINT_WARN_TOL = 1e-6


class ConstraintWarning(RuntimeWarning):
    """The input state violates the density-deformation constraint."""


# ---------------------------------------------------------------------------
# Energy ledger.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyReport:
    """Instantaneous energy budget plus the cumulative balance residual.

    ``balance_residual`` is the signed defect of the discrete ledger
    ``[kinetic + elastic_E + potential](t) + dissipation_cum(t) - [same](0)``,
    which vanishes at the time scheme's order for incompressible
    constraint-compatible runs.
    """

    kinetic: float
    elastic_E: float
    elastic_F: float
    potential: float
    dissipation_cum: float
    balance_residual: float

    def __post_init__(self) -> None:
        for name in ("kinetic", "elastic_E", "elastic_F", "potential",
                     "dissipation_cum", "balance_residual"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"EnergyReport.{name} must be finite")
        for name in ("kinetic", "potential", "dissipation_cum"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"EnergyReport.{name} must be nonnegative")

    @property
    def ledger(self) -> float:
        """The conserved combination: kinetic + elastic_E + potential."""
        return self.kinetic + self.elastic_E + self.potential


def viscous_dissipation_rate(s: State, mu: float) -> float:
    """Instantaneous dissipation rate ``mu * integral |grad u|^2``."""
    return mu * h1_seminorm_sq(s.u)


def energy_report(
    s: State,
    dissipation_cum: float,
    law: PressureLaw = PressureLaw(),
    reference: EnergyReport | None = None,
) -> EnergyReport:
    """Evaluate the energy budget of ``s`` by grid quadrature.

    ``dissipation_cum`` is the externally accumulated time integral of the
    dissipation rate (the run loop owns the quadrature so it matches the
    stepper's stage weights).  ``reference`` is the report of the initial
    state; without it the balance residual is measured against ``s`` itself,
    which is only meaningful at the start of a run.
    """
    grid = s.grid
    rho = s.rho.values
    kinetic = 0.5 * integrate(rho * np.sum(s.u.values**2, axis=0), grid)
    elastic_e = 0.5 * integrate(rho * np.sum(s.E.values**2, axis=(0, 1)), grid)
    f = deformation_tensor(s.E)
    elastic_f = 0.5 * integrate(rho * np.sum(f**2, axis=(0, 1)), grid)
    potential = integrate(pressure_potential(s.rho, law))
    ledger = kinetic + elastic_e + potential
    base = reference.ledger if reference is not None else ledger
    return EnergyReport(
        kinetic=kinetic,
        elastic_E=elastic_e,
        elastic_F=elastic_f,
        potential=potential,
        dissipation_cum=dissipation_cum,
        balance_residual=ledger + dissipation_cum - base,
    )


# ---------------------------------------------------------------------------
# Conserved trace integral.
# ---------------------------------------------------------------------------


def tr_integral(s: State) -> float:
    """Grid quadrature of ``rho tr E``, conserved along incompressible
    constraint-compatible trajectories (the integral only -- the pointwise
    transport balance carries a genuine ``rho tr(grad(u) E)`` source, which
    :func:`trace_transport_defect` reports informationally)."""
    tr = np.einsum("ii...->...", s.E.values)
    return integrate(s.rho.values * tr, s.grid)


def trace_transport_defect(s: State, cfg: StepConfig) -> float:
    """L2 norm of ``d/dt(rho tr E) + div(rho u tr E)`` assembled from the
    instantaneous right-hand sides.

    For exact fields this equals ``|| rho (div u + tr(grad(u) E)) ||_2`` --
    nonzero in general, hence informational rather than asserted."""
    grid = s.grid
    rho, u = s.rho.values, s.u.values
    tr = np.einsum("ii...->...", s.E.values)
    drho = continuity_rhs(s, cfg).values
    trde = np.einsum("ii...->...", deformation_rhs(s, cfg).values)
    flux = div_values(grid, _deal(grid, rho * u * tr, cfg.use_dealias))
    return _lq_of_values(grid, drho * tr + rho * trde + flux, 2.0)


# ---------------------------------------------------------------------------
# Transported log-density gradient.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaState:
    """Independently evolved log-density gradient ``sigma``."""

    sigma: VectorField


def sigma_init(s: State) -> SigmaState:
    """``sigma_0 = grad ln rho_0`` (requires positive density)."""
    rho = s.rho.values
    if np.min(rho) <= 0.0:
        raise DensityError("sigma requires strictly positive density")
    return SigmaState(VectorField(s.grid, grad_values(s.grid, np.log(rho))))


def _sigma_rhs(grid: Grid, u: np.ndarray, sigma: np.ndarray, on: bool) -> np.ndarray:
    dot = np.einsum("i...,i...->...", u, sigma)
    return -grad_values(grid, _deal(grid, dot, on))


def sigma_step(
    sig: SigmaState, s_old: State, s_new: State, cfg: StepConfig
) -> SigmaState:
    """Advance ``d sigma/dt = -grad(u . sigma)`` across one step.

    Uses the explicit part of the configured scheme with the velocities of
    the two endpoint states, so sigma keeps the stepper's temporal order
    (the transport velocity is time dependent; a single frozen state would
    cap the pair at first order)."""
    grid = s_old.grid
    dt, on = cfg.dt, cfg.use_dealias
    r1 = _sigma_rhs(grid, s_old.u.values, sig.sigma.values, on)
    if cfg.scheme == "imex1":
        new = sig.sigma.values + dt * r1
    else:
        predictor = sig.sigma.values + dt * r1
        r2 = _sigma_rhs(grid, s_new.u.values, predictor, on)
        new = sig.sigma.values + 0.5 * dt * (r1 + r2)
    return SigmaState(VectorField(grid, new))


def sigma_consistency(sig: SigmaState, s: State) -> float:
    """``|| sigma - grad ln rho ||_2`` against the evolved density of ``s``."""
    rho = s.rho.values
    if np.min(rho) <= 0.0:
        raise DensityError("sigma consistency requires strictly positive density")
    diff = sig.sigma.values - grad_values(s.grid, np.log(rho))
    return _lq_of_values(s.grid, diff, 2.0)


# ---------------------------------------------------------------------------
# Parabolic reformulation of the momentum balance.
# ---------------------------------------------------------------------------


def compute_Z(s: State, mu: float) -> tuple[VectorField, VectorField]:
    """Potential part of the deformation force and the shifted velocity.

    ``Z1`` solves ``-lap Z1 = div E`` componentwise with zero mean;
    ``Z = u - Z1/mu`` is the combination that satisfies a forced heat
    equation whenever the state solves the momentum equation."""
    if mu <= 0.0:
        raise ValueError(f"viscosity must be positive, got {mu}")
    z1 = invlap_meanzero_values(s.grid, div_values(s.grid, s.E.values))
    z = s.u.values - z1 / mu
    return VectorField(s.grid, z1), VectorField(s.grid, z)


def _check_identity_inputs(s: State, cfg: StepConfig, what: str) -> None:
    if cfg.mode != "incompressible":
        raise ValueError(f"{what} is defined in incompressible mode only")
    defect = lq_norm(constraint_div_rhoFT(s), 2.0)
    if defect > CONSTRAINT_WARN_TOL:
        warnings.warn(
            f"{what}: constraint residual {defect:.3e} exceeds "
            f"{CONSTRAINT_WARN_TOL:.1e}; the identity legitimately fails",
            ConstraintWarning,
            stacklevel=3,
        )


def _forcing_split(
    s: State, cfg: StepConfig, du: np.ndarray, q: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """The two forcing functionals of the heat-equation reformulation.

    The first collects the momentum nonlinearities (advection grouped
    conservatively, exactly as the stepper groups it; total pressure
    ``P(rho) + q``); the second is the time derivative of ``Z1/mu``,
    realized through the zero-mean inverse Laplacian."""
    grid = s.grid
    on = cfg.use_dealias
    rho, u, e = s.rho.values, s.u.values, s.E.values

    mflux = _mass_flux_div(grid, rho, u, on)
    advection = _deal(grid, u * mflux, on) - _momentum_flux_div(grid, rho, u, on)
    total_pressure = _deal(grid, pressure(s.rho, cfg.law).values, on) + q
    ee = np.einsum("ik...,jk...->ij...", e, e)
    f1 = (
        advection
        - grad_values(grid, total_pressure)
        + div_values(grid, _deal(grid, (rho - 1.0) * e, on))
        + div_values(grid, _deal(grid, rho * ee, on))
        + (1.0 - rho) * du
    )

    de = deformation_rhs(s, cfg).values
    f2 = invlap_meanzero_values(grid, div_values(grid, de)) / cfg.mu
    return f1, f2


def _z_residual_values(
    s: State, cfg: StepConfig, du: np.ndarray, q: np.ndarray
) -> np.ndarray:
    grid = s.grid
    _, z = compute_Z(s, cfg.mu)
    f1, f2 = _forcing_split(s, cfg, du, q)
    dz = du - f2
    return dz - cfg.mu * lap_values(grid, z.values) - (f1 - f2)


def z_parabolic_residual(s: State, cfg: StepConfig) -> float:
    """L2 defect of the heat equation satisfied by ``Z = u - Z1/mu``.

    Assembles ``dZ/dt - mu lap Z - (F1 - F2)`` with the velocity tendency
    and multiplier taken from :func:`vela.dynamics.momentum_rhs`.  The
    shared algebra cancels exactly, leaving the constraint defect: near
    zero for compatible states, large for violating ones (a warning is
    emitted in that case)."""
    _check_identity_inputs(s, cfg, "z_parabolic_residual")
    du, q = momentum_rhs(s, cfg)
    res = _z_residual_values(s, cfg, du.values, q.values)
    return _lq_of_values(s.grid, res, 2.0)


def _pressure_poisson_values(
    s: State, cfg: StepConfig, du: np.ndarray, q: np.ndarray
) -> np.ndarray:
    grid = s.grid
    on = cfg.use_dealias
    rho, u, e = s.rho.values, s.u.values, s.E.values
    total_pressure = _deal(grid, pressure(s.rho, cfg.law).values, on) + q
    gu = np.swapaxes(grad_values(grid, u), 0, 1)
    advection = np.einsum("ij...,j...->i...", gu, u)
    ee = np.einsum("ik...,jk...->ij...", e, e)
    # Second derivatives as div(grad(.)): the check is the divergence of the
    # momentum balance, so every derivative is the package's own symbol.
    return (
        div_values(grid, grad_values(grid, total_pressure))
        + div_values(grid, grad_values(grid, rho))
        - div_values(grid, div_values(grid, _deal(grid, rho * ee, on)))
        + div_values(grid, _deal(grid, rho * advection, on))
        + div_values(grid, (rho - 1.0) * du)
    )


def pressure_poisson_residual(
    s: State,
    cfg: StepConfig,
    du_dt: VectorField | None = None,
    multiplier: ScalarField | None = None,
) -> float:
    """L2 defect of the divergence of the momentum balance.

    Assembles ``lap(P(rho) + q) + lap rho - div div(rho E E^T)
    + div(rho (u.grad) u) + div((rho - 1) du/dt)``, which reduces to twice
    the divergence of the constraint defect under ``div u = 0``.  When
    ``du_dt``/``multiplier`` are omitted they are computed from
    :func:`vela.dynamics.momentum_rhs`; pass both from one call to share
    the elliptic solve."""
    _check_identity_inputs(s, cfg, "pressure_poisson_residual")
    if du_dt is None or multiplier is None:
        du_dt, multiplier = momentum_rhs(s, cfg)
    res = _pressure_poisson_values(s, cfg, du_dt.values, multiplier.values)
    return _lq_of_values(s.grid, res, 2.0)


# ---------------------------------------------------------------------------
# Aggregated report.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsReport:
    """Every tracked identity residual and norm at one trajectory point.

    The reformulation residuals are ``nan`` in compressible mode, where
    those identities are not defined."""

    time: float
    energy: EnergyReport
    constraints: ConstraintReport
    tr_integral: float
    sigma_consistency_l2: float
    z_residual_l2: float
    pressure_poisson_residual_l2: float
    u_l2: float
    u_lq: float
    u_w1q: float
    u_h1semi: float
    rho_m1_l2: float
    rho_m1_lq: float
    rho_m1_w1q: float
    E_l2: float
    E_lq: float
    E_w1q: float
    rho_min: float
    rho_max: float

    def __post_init__(self) -> None:
        for name in ("u_l2", "u_lq", "u_w1q", "u_h1semi", "rho_m1_l2",
                     "rho_m1_lq", "rho_m1_w1q", "E_l2", "E_lq", "E_w1q",
                     "sigma_consistency_l2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"DiagnosticsReport.{name} must be a nonnegative real")
        if not self.rho_min > 0.0:
            raise ValueError("DiagnosticsReport.rho_min must be positive")


def report(
    s: State,
    sigma: SigmaState,
    dissipation_cum: float,
    cfg: StepConfig,
    *,
    reference: EnergyReport | None = None,
    q: float = 4.0,
) -> DiagnosticsReport:
    """Evaluate the full diagnostics suite at one trajectory point.

    ``q`` is the Lebesgue/Sobolev exponent for the auxiliary norms.  The
    reformulation residuals share a single :func:`momentum_rhs` evaluation
    (one elliptic solve)."""
    grid = s.grid
    energy = energy_report(s, dissipation_cum, cfg.law, reference)
    constraints = constraint_report(s, q)
    if cfg.mode == "incompressible":
        du, mult = momentum_rhs(s, cfg)
        z_l2 = _lq_of_values(
            grid, _z_residual_values(s, cfg, du.values, mult.values), 2.0
        )
        pp_l2 = _lq_of_values(
            grid, _pressure_poisson_values(s, cfg, du.values, mult.values), 2.0
        )
    else:
        z_l2 = float("nan")
        pp_l2 = float("nan")
    rho_m1 = ScalarField(grid, s.rho.values - 1.0)
    return DiagnosticsReport(
        time=s.t,
        energy=energy,
        constraints=constraints,
        tr_integral=tr_integral(s),
        sigma_consistency_l2=sigma_consistency(sigma, s),
        z_residual_l2=z_l2,
        pressure_poisson_residual_l2=pp_l2,
        u_l2=lq_norm(s.u, 2.0),
        u_lq=lq_norm(s.u, q),
        u_w1q=w1q_norm(s.u, q),
        u_h1semi=math.sqrt(h1_seminorm_sq(s.u)),
        rho_m1_l2=lq_norm(rho_m1, 2.0),
        rho_m1_lq=lq_norm(rho_m1, q),
        rho_m1_w1q=w1q_norm(rho_m1, q),
        E_l2=lq_norm(s.E, 2.0),
        E_lq=lq_norm(s.E, q),
        E_w1q=w1q_norm(s.E, q),
        rho_min=float(np.min(s.rho.values)),
        rho_max=float(np.max(s.rho.values)),
    )
