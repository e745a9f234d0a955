"""Manufactured solutions and convergence studies.

A manufactured solution is a closed-form field history -- here a small sum
of traveling cosine waves per field -- together with its analytic time
derivative.  Feeding both through the full space-time residual operator of
:mod:`vela.dynamics` yields the forcing that makes the manufactured history
an exact solution of the forced system, so the solver's deviation from it
measures pure discretization error.  Because the forcing is assembled by the
same operator the stepper discretizes, term grouping cancels identically and
the measured errors isolate the time scheme (temporal study) or the spatial
truncation (resolution study).

Velocity modes are projected perpendicular to their wavevector in closed
form, so the manufactured velocity is divergence-free to rounding and the
incompressible pressure solve sees a compatible right-hand side.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import SimulationError, StepConfig, SystemResidual, residual, step
from .grid import Grid, ScalarField, TensorField, VectorField, lq_norm
from .state import State

__all__ = [
    "ConvergenceReport",
    "ManufacturedSpec",
    "ScalarMode",
    "TensorMode",
    "VectorMode",
    "convergence_study",
    "manufactured_fields",
    "manufactured_forcing",
    "standard_spec",
]


# --------------------------------------------------------------------------
# Mode descriptions
# --------------------------------------------------------------------------


def _check_mode(wavevector: tuple[int, ...], amplitude: float) -> None:
    if not wavevector or not all(isinstance(m, int) for m in wavevector):
        raise ValueError(f"wavevector must be a tuple of ints, got {wavevector!r}")
    if not math.isfinite(amplitude):
        raise ValueError(f"amplitude must be finite, got {amplitude!r}")


@dataclass(frozen=True)
class ScalarMode:
    """One traveling cosine wave ``amp * cos(k . x + phase - frequency * t)``.

    ``wavevector`` counts integer periods per box edge; the physical
    wavenumber is ``2 pi m / length`` per axis.
    """

    wavevector: tuple[int, ...]
    amplitude: float
    phase: float = 0.0
    frequency: float = 1.0

    def __post_init__(self) -> None:
        _check_mode(self.wavevector, self.amplitude)


@dataclass(frozen=True)
class VectorMode:
    """A traveling wave carried by a constant direction vector.

    When the owning spec is solenoidal the direction is replaced, in closed
    form, by its component perpendicular to the wavevector, so each mode is
    individually divergence-free.
    """

    wavevector: tuple[int, ...]
    direction: tuple[float, ...]
    amplitude: float
    phase: float = 0.0
    frequency: float = 1.0

    def __post_init__(self) -> None:
        _check_mode(self.wavevector, self.amplitude)
        if len(self.direction) != len(self.wavevector):
            raise ValueError("direction and wavevector dimensions differ")

    def projected_direction(self, solenoidal: bool) -> tuple[float, ...]:
        """Direction with its along-wavevector component removed (exactly)."""
        d = np.asarray(self.direction, dtype=np.float64)
        m = np.asarray(self.wavevector, dtype=np.float64)
        m2 = float(m @ m)
        if solenoidal and m2 > 0.0:
            d = d - (float(d @ m) / m2) * m
        norm = float(np.linalg.norm(d))
        if norm < 1e-12:
            raise ValueError(
                f"direction {self.direction} is parallel to wavevector "
                f"{self.wavevector}; the projected mode vanishes"
            )
        return tuple(float(x) for x in d)


@dataclass(frozen=True)
class TensorMode:
    """A traveling wave placed in a single tensor entry ``(row, col)``."""

    wavevector: tuple[int, ...]
    entry: tuple[int, int]
    amplitude: float
    phase: float = 0.0
    frequency: float = 1.0

    def __post_init__(self) -> None:
        _check_mode(self.wavevector, self.amplitude)
        row, col = self.entry
        dim = len(self.wavevector)
        if not (0 <= row < dim and 0 <= col < dim):
            raise ValueError(f"entry {self.entry} out of range for dim {dim}")


@dataclass(frozen=True)
class ManufacturedSpec:
    """A complete manufactured history: modes for each field of the system.

    The density modes ride on a background of one; their amplitude sum must
    stay below 0.5 so the manufactured density is bounded away from zero
    uniformly in time.  Wavevector magnitudes are checked against the
    dealias cutoff at evaluation time (they must survive the product
    filter), not here, because the grid is not known yet.
    """

    dim: int
    density: tuple[ScalarMode, ...] = ()
    velocity: tuple[VectorMode, ...] = ()
    deformation: tuple[TensorMode, ...] = ()
    solenoidal: bool = True

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        for mode in (*self.density, *self.velocity, *self.deformation):
            if len(mode.wavevector) != self.dim:
                raise ValueError(
                    f"mode wavevector {mode.wavevector} does not match dim {self.dim}"
                )
        rho_amp = sum(abs(m.amplitude) for m in self.density)
        if rho_amp >= 0.5:
            raise ValueError(
                f"density amplitudes sum to {rho_amp}; must stay below 0.5 "
                "so the density is uniformly positive"
            )

    def max_mode(self) -> int:
        """Largest wavevector component over all modes (infinity norm)."""
        out = 0
        for mode in (*self.density, *self.velocity, *self.deformation):
            out = max(out, max(abs(m) for m in mode.wavevector))
        return out


def standard_spec(dim: int = 2) -> ManufacturedSpec:
    """The stock low-mode spec used by the bundled convergence studies.

    Three modes per field, amplitudes near ``1e-2``, unit temporal
    frequency, wavevector components no larger than one -- smooth, cheap,
    and far below any reasonable dealias cutoff.
    """
    if dim == 2:
        return ManufacturedSpec(
            dim=2,
            density=(
                ScalarMode((1, 0), 1.0e-2, phase=0.3),
                ScalarMode((0, 1), 0.7e-2, phase=1.1),
                ScalarMode((1, 1), 0.5e-2, phase=2.0),
            ),
            velocity=(
                VectorMode((1, 0), (0.0, 1.0), 1.0e-2, phase=0.2),
                VectorMode((0, 1), (1.0, 0.0), 0.8e-2, phase=1.4),
                VectorMode((1, 1), (1.0, -1.0), 0.6e-2, phase=2.6),
            ),
            deformation=(
                TensorMode((0, 1), (0, 0), 1.0e-2, phase=0.5),
                TensorMode((1, 0), (0, 1), 0.8e-2, phase=1.7),
                TensorMode((1, 1), (1, 0), 0.6e-2, phase=2.9),
            ),
        )
    if dim == 3:
        return ManufacturedSpec(
            dim=3,
            density=(
                ScalarMode((1, 0, 0), 1.0e-2, phase=0.3),
                ScalarMode((0, 1, 0), 0.7e-2, phase=1.1),
                ScalarMode((0, 0, 1), 0.5e-2, phase=2.0),
            ),
            velocity=(
                VectorMode((1, 0, 0), (0.0, 1.0, 0.5), 1.0e-2, phase=0.2),
                VectorMode((0, 1, 0), (0.5, 0.0, 1.0), 0.8e-2, phase=1.4),
                VectorMode((1, 1, 0), (1.0, -1.0, 0.7), 0.6e-2, phase=2.6),
            ),
            deformation=(
                TensorMode((0, 1, 0), (0, 0), 1.0e-2, phase=0.5),
                TensorMode((1, 0, 0), (0, 1), 0.8e-2, phase=1.7),
                TensorMode((0, 0, 1), (2, 0), 0.6e-2, phase=2.9),
            ),
        )
    raise ValueError(f"dim must be 2 or 3, got {dim}")


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def _phase_field(
    grid: Grid, wavevector: tuple[int, ...], phase: float, t: float, frequency: float
) -> np.ndarray:
    theta = np.full(grid.shape, phase - frequency * t, dtype=np.float64)
    scale = 2.0 * math.pi / grid.length
    coords = grid.coordinates()
    for axis, m in enumerate(wavevector):
        if m != 0:
            theta = theta + (scale * m) * coords[axis]
    return theta


def manufactured_fields(
    spec: ManufacturedSpec, grid: Grid, t: float
) -> tuple[State, SystemResidual]:
    """Sample the manufactured history and its analytic time derivative.

    Returns the state at time ``t`` together with ``(d rho/dt, d u/dt,
    d E/dt)`` bundled as a :class:`SystemResidual` (the same container a
    forcing uses, since a forcing is just a prescribed tendency).
    """
    if grid.dim != spec.dim:
        raise ValueError(f"grid dim {grid.dim} does not match spec dim {spec.dim}")
    cutoff = grid.n // 3
    if spec.max_mode() > cutoff:
        raise ValueError(
            f"spec uses wavevector component {spec.max_mode()} beyond the "
            f"dealias cutoff {cutoff} of an n={grid.n} grid"
        )

    rho = np.ones(grid.shape, dtype=np.float64)
    drho = np.zeros(grid.shape, dtype=np.float64)
    for mode in spec.density:
        theta = _phase_field(grid, mode.wavevector, mode.phase, t, mode.frequency)
        rho += mode.amplitude * np.cos(theta)
        drho += mode.amplitude * mode.frequency * np.sin(theta)

    u = np.zeros((grid.dim, *grid.shape), dtype=np.float64)
    du = np.zeros_like(u)
    for vmode in spec.velocity:
        direction = vmode.projected_direction(spec.solenoidal)
        theta = _phase_field(grid, vmode.wavevector, vmode.phase, t, vmode.frequency)
        wave = vmode.amplitude * np.cos(theta)
        dwave = vmode.amplitude * vmode.frequency * np.sin(theta)
        for i, d_i in enumerate(direction):
            if d_i != 0.0:
                u[i] += d_i * wave
                du[i] += d_i * dwave

    e = np.zeros((grid.dim, grid.dim, *grid.shape), dtype=np.float64)
    de = np.zeros_like(e)
    for tmode in spec.deformation:
        row, col = tmode.entry
        theta = _phase_field(grid, tmode.wavevector, tmode.phase, t, tmode.frequency)
        e[row, col] += tmode.amplitude * np.cos(theta)
        de[row, col] += tmode.amplitude * tmode.frequency * np.sin(theta)

    state = State(
        t=t,
        rho=ScalarField(grid, rho),
        u=VectorField(grid, u),
        E=TensorField(grid, e),
    )
    derivative = SystemResidual(
        continuity=ScalarField(grid, drho),
        momentum=VectorField(grid, du),
        deformation=TensorField(grid, de),
    )
    return state, derivative


def manufactured_forcing(
    spec: ManufacturedSpec, grid: Grid, t: float, cfg: StepConfig
) -> SystemResidual:
    """Forcing that makes the manufactured history an exact solution.

    This is the full space-time residual operator applied to the
    manufactured state and its analytic derivative, so it inherits the
    dynamics' own term grouping: add it to the right-hand side and the
    manufactured history satisfies the forced system identically.
    """
    state, derivative = manufactured_fields(spec, grid, t)
    return residual(
        state, derivative.continuity, derivative.momentum, derivative.deformation, cfg
    )


# --------------------------------------------------------------------------
# Convergence studies
# --------------------------------------------------------------------------

_FIELDS = ("rho", "u", "E")


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors and fitted orders from a temporal + spatial refinement sweep.

    ``dt_errors`` / ``n_errors`` map field name (``rho``, ``u``, ``E``) to
    the final-time L2 error at each step size / resolution.  ``dt_orders``
    are least-squares slopes in log-log; the spatial study is expected to
    sit at the spectral floor rather than follow a power law, so it reports
    raw errors only.
    """

    dts: tuple[float, ...]
    ns: tuple[int, ...]
    dt_errors: dict[str, tuple[float, ...]] = field(default_factory=dict)
    n_errors: dict[str, tuple[float, ...]] = field(default_factory=dict)
    dt_orders: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, errs in (*self.dt_errors.items(), *self.n_errors.items()):
            if not all(math.isfinite(e) and e >= 0.0 for e in errs):
                raise ValueError(f"non-finite or negative error for field {name}: {errs}")
        for name, order in self.dt_orders.items():
            if not math.isfinite(order):
                raise ValueError(f"non-finite fitted order for field {name}")

    def spatial_floor(self) -> float:
        """Worst error over all fields at the finest resolution."""
        return max(errs[-1] for errs in self.n_errors.values())


def _run_forced(
    spec: ManufacturedSpec, grid: Grid, cfg: StepConfig, horizon: float, nsteps: int
) -> State:
    state, _ = manufactured_fields(spec, grid, 0.0)

    def forcing(t: float) -> SystemResidual:
        return manufactured_forcing(spec, grid, t, cfg)

    try:
        for _ in range(nsteps):
            state = step(state, cfg, forcing)
    except SimulationError as exc:
        raise type(exc)(
            f"{exc} (during convergence run: n={grid.n}, dt={cfg.dt}, "
            f"scheme={cfg.scheme}, horizon={horizon})"
        ) from exc
    return state


def _field_errors(state: State, spec: ManufacturedSpec, t: float) -> dict[str, float]:
    exact, _ = manufactured_fields(spec, state.grid, t)
    return {
        "rho": lq_norm(ScalarField(state.grid, state.rho.values - exact.rho.values)),
        "u": lq_norm(VectorField(state.grid, state.u.values - exact.u.values)),
        "E": lq_norm(TensorField(state.grid, state.E.values - exact.E.values)),
    }


def convergence_study(
    spec: ManufacturedSpec,
    cfg: StepConfig,
    *,
    dts: Sequence[float],
    ns: Sequence[int],
    horizon: float = 0.25,
    length: float = 2.0 * math.pi,
    spatial_dt: float | None = None,
) -> ConvergenceReport:
    """Run the forced system against the manufactured history twice over.

    Temporal sweep: fixed grid at ``max(ns)``, one run per entry of
    ``dts`` (each must divide the horizon into a whole number of steps).
    Spatial sweep: one run per entry of ``ns`` at ``spatial_dt`` (default
    ``min(dts)``); since the manufactured fields are band-limited, this
    error is pure time-stepping residue and should sit at a flat floor.
    Errors are final-time L2 distances to the manufactured fields; orders
    are least-squares log-log slopes of the temporal errors.
    """
    dts = tuple(float(dt) for dt in dts)
    ns = tuple(int(n) for n in ns)
    if len(dts) < 3:
        raise ValueError(f"need at least 3 step sizes for a fit, got {len(dts)}")
    if len(ns) < 2:
        raise ValueError(f"need at least 2 resolutions, got {len(ns)}")
    if sorted(dts, reverse=True) != list(dts) or sorted(ns) != list(ns):
        raise ValueError("dts must be decreasing and ns increasing")
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")

    def steps_for(dt: float) -> int:
        nsteps = round(horizon / dt)
        if nsteps < 1 or abs(nsteps * dt - horizon) > 1e-9 * horizon:
            raise ValueError(f"dt={dt} does not divide horizon={horizon}")
        return nsteps

    dt_errors: dict[str, list[float]] = {name: [] for name in _FIELDS}
    grid_fine = Grid(dim=spec.dim, n=ns[-1], length=length)
    for dt in dts:
        run_cfg = replace(cfg, dt=dt)
        final = _run_forced(spec, grid_fine, run_cfg, horizon, steps_for(dt))
        errs = _field_errors(final, spec, final.t)
        for name in _FIELDS:
            dt_errors[name].append(errs[name])

    n_errors: dict[str, list[float]] = {name: [] for name in _FIELDS}
    dt_ref = dts[-1] if spatial_dt is None else float(spatial_dt)
    run_cfg = replace(cfg, dt=dt_ref)
    for n in ns:
        grid = Grid(dim=spec.dim, n=n, length=length)
        final = _run_forced(spec, grid, run_cfg, horizon, steps_for(dt_ref))
        errs = _field_errors(final, spec, final.t)
        for name in _FIELDS:
            n_errors[name].append(errs[name])

    log_dt = np.log(np.asarray(dts))
    dt_orders: dict[str, float] = {}
    for name in _FIELDS:
        errs = np.asarray(dt_errors[name])
        if np.all(errs > 0.0):
            slope = float(np.polyfit(log_dt, np.log(errs), 1)[0])
        else:
            slope = 0.0
        dt_orders[name] = slope

    return ConvergenceReport(
        dts=dts,
        ns=ns,
        dt_errors={k: tuple(v) for k, v in dt_errors.items()},
        n_errors={k: tuple(v) for k, v in n_errors.items()},
        dt_orders=dt_orders,
    )
