"""Config-driven command line front end.

Four subcommands share one plain-text ``key = value`` config format:

``run``
    Advance the system from a configured initial state, appending a
    diagnostics row to a CSV series every ``output_every`` steps and
    writing a binary checkpoint of the final state.  Numerical aborts
    (density positivity, CFL, pressure iteration) still finish the CSV --
    last good row plus a ``# abort:`` trailer -- and exit with code 3.
``mms``
    Manufactured-solution convergence study; writes the error table as CSV
    and prints fitted temporal orders.
``check``
    Evaluate every structural identity on the configured initial state (or
    a checkpoint) and print one PASS/FAIL line per identity; exits nonzero
    if any hard identity misses its tolerance.
``info``
    Print the header and field norms of a checkpoint.

Exit codes: 0 success, 1 failed identity check, 2 configuration or file
format error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import math
import struct
import sys
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .diagnostics import (
    ConstraintWarning,
    DiagnosticsReport,
    SigmaState,
    energy_report,
    pressure_poisson_residual,
    report,
    sigma_init,
    sigma_step,
    viscous_dissipation_rate,
    z_parabolic_residual,
)
from .dynamics import (
    CflError,
    DensityError,
    PressureIterationError,
    SimulationError,
    StepConfig,
    SystemResidual,
    step,
)
from .grid import Grid, ScalarField, TensorField, VectorField, lq_norm
from .mms import convergence_study, manufactured_fields, manufactured_forcing, standard_spec
from .state import PressureLaw, State, constraint_report, initial_state

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "ConfigError",
    "ConfigWarning",
    "RunConfig",
    "build_initial_state",
    "check_identities",
    "main",
    "parse_config",
    "read_checkpoint",
    "run_simulation",
    "write_checkpoint",
]


class ConfigError(ValueError):
    """A config file could not be parsed or violates a constraint."""


class ConfigWarning(UserWarning):
    """A config value is legal but outside the recommended range."""


class CheckpointError(RuntimeError):
    """A checkpoint file is unreadable, truncated, or inconsistent."""


_INIT_KINDS = (
    "equilibrium",
    "taylor_green_perturbed",
    "constraint_compatible",
    "checkpoint",
    "manufactured",
)

_TAU = 2.0 * math.pi


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for every subcommand.

    Defaults describe the stock desk-scale run: 2-D, ``n=64`` unit-density
    equilibrium-adjacent data, incompressible, second-order scheme.
    """

    dim: int = 2
    n: int = 64
    length: float = _TAU
    mu: float = 0.1
    gamma: float = 2.0
    mode: str = "incompressible"
    dt: float = 1e-3
    t_end: float = 1.0
    output_every: int = 10
    q_norm: float = 4.0
    scheme: str = "imex2"
    dealias: bool = True
    init: str = "equilibrium"
    delta: float = 1e-2
    seed: int = 0
    csv_path: str = "series.csv"
    checkpoint_path: str = "final.ckpt"
    init_checkpoint: str = ""
    check_tol: float = 1e-6
    check_strict_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim: must be 2 or 3, got {self.dim}")
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"n: must be an even integer >= 4, got {self.n}")
        for name in ("length", "mu", "dt", "t_end"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name}: must be positive and finite, got {value}")
        if not (self.gamma > 1.0 and math.isfinite(self.gamma)):
            raise ValueError(
                f"gamma: the pressure law needs gamma > 1, got {self.gamma}"
            )
        if self.mode not in ("incompressible", "compressible"):
            raise ValueError(f"mode: unknown mode {self.mode!r}")
        if self.scheme not in ("imex1", "imex2"):
            raise ValueError(f"scheme: unknown scheme {self.scheme!r}")
        if self.init not in _INIT_KINDS:
            raise ValueError(
                f"init: unknown initial state {self.init!r} "
                f"(choices: {', '.join(_INIT_KINDS)})"
            )
        if self.output_every < 1:
            raise ValueError(f"output_every: must be >= 1, got {self.output_every}")
        if not (self.q_norm > 1.0 and math.isfinite(self.q_norm)):
            raise ValueError(f"q_norm: must be a finite number > 1, got {self.q_norm}")
        if not (3.0 < self.q_norm <= 6.0):
            warnings.warn(
                f"q_norm = {self.q_norm} is outside the recommended range (3, 6]",
                ConfigWarning,
                stacklevel=2,
            )
        if not (self.delta >= 0.0 and math.isfinite(self.delta)):
            raise ValueError(f"delta: must be nonnegative and finite, got {self.delta}")
        if self.seed < 0:
            raise ValueError(f"seed: must be a nonnegative integer, got {self.seed}")
        for name in ("check_tol", "check_strict_tol"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name}: must be positive, got {value}")
        if self.init == "checkpoint" and not self.init_checkpoint:
            raise ValueError(
                "init: init = checkpoint requires an init_checkpoint path"
            )


_BOOL_WORDS = {
    "true": True,
    "false": False,
    "yes": True,
    "no": False,
    "on": True,
    "off": False,
    "1": True,
    "0": False,
}


def _parse_value(key: str, raw: str, kind: type, lineno: int) -> object:
    if kind is bool:
        try:
            return _BOOL_WORDS[raw.lower()]
        except KeyError:
            raise ConfigError(
                f"line {lineno}: key '{key}': expected a boolean "
                f"(true/false/yes/no/on/off/1/0), got {raw!r}"
            ) from None
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: key '{key}': expected an integer, got {raw!r}"
            ) from None
    if kind is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: key '{key}': expected a number, got {raw!r}"
            ) from None
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines (UTF-8, ``#`` comments) into a config.

    Every error message names the offending key and line.  Omitted keys
    take the documented defaults of :class:`RunConfig`.
    """
    types = {f.name: type(f.default) for f in fields(RunConfig)}
    values: dict[str, object] = {}
    lines: dict[str, int] = {}

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}: expected 'key = value', got {raw_line.strip()!r}"
            )
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if not raw:
            raise ConfigError(f"line {lineno}: key '{key}': empty value")
        values[key] = _parse_value(key, raw, types[key], lineno)
        lines[key] = lineno

    try:
        return RunConfig(**values)  # type: ignore[arg-type]
    except ValueError as exc:
        key, _, rest = str(exc).partition(":")
        detail = rest.strip() or str(exc)
        if key in lines:
            raise ConfigError(f"line {lines[key]}: key '{key}': {detail}") from None
        raise ConfigError(f"key '{key}': {detail}") from None


# --------------------------------------------------------------------------
# Checkpoints
# --------------------------------------------------------------------------

_MAGIC = b"VELA0001"
_VERSION = 1
_HEADER = struct.Struct("<8sIIIddddB7x")
_MODE_BYTE = {"incompressible": 0, "compressible": 1}
_BYTE_MODE = {v: k for k, v in _MODE_BYTE.items()}


@dataclass(frozen=True)
class Checkpoint:
    """A deserialized checkpoint: the state plus its run parameters."""

    state: State
    gamma: float
    mu: float
    mode: str
    version: int = _VERSION


def write_checkpoint(
    s: State,
    path: str | Path,
    *,
    gamma: float = 2.0,
    mu: float = 0.1,
    mode: str = "incompressible",
) -> None:
    """Serialize a state (header + raw little-endian f64 payloads).

    Arrays are written with the first spatial index varying fastest; the
    round trip through :func:`read_checkpoint` is bitwise exact.
    """
    grid = s.grid
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        grid.dim,
        grid.n,
        grid.length,
        s.t,
        gamma,
        mu,
        _MODE_BYTE[mode],
    )

    def raw(a: np.ndarray) -> bytes:
        return np.ascontiguousarray(a.ravel(order="F"), dtype="<f8").tobytes()

    chunks = [header, raw(s.rho.values)]
    for i in range(grid.dim):
        chunks.append(raw(s.u.values[i]))
    for i in range(grid.dim):
        for j in range(grid.dim):
            chunks.append(raw(s.E.values[i, j]))
    Path(path).write_bytes(b"".join(chunks))


def _read_checkpoint_full(path: str | Path) -> Checkpoint:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise CheckpointError(
            f"short read: {len(blob)} bytes is smaller than the "
            f"{_HEADER.size}-byte header"
        )
    magic, version, dim, n, length, t, gamma, mu, mode_byte = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise CheckpointError(f"bad magic {magic!r}; expected {_MAGIC!r}")
    if version != _VERSION:
        raise CheckpointError(f"version mismatch: file has {version}, expected {_VERSION}")
    if dim not in (2, 3):
        raise CheckpointError(f"dimension mismatch: file claims dim {dim}")
    if mode_byte not in _BYTE_MODE:
        raise CheckpointError(f"unknown mode byte {mode_byte}")

    count = n**dim
    expected = _HEADER.size + count * (1 + dim + dim * dim) * 8
    if len(blob) != expected:
        raise CheckpointError(
            f"short read: expected {expected} bytes for dim={dim}, n={n}, "
            f"got {len(blob)}"
        )

    grid = Grid(dim=dim, n=n, length=length)
    payload = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)

    def block(start: int) -> np.ndarray:
        return payload[start * count : (start + 1) * count].reshape(
            grid.shape, order="F"
        )

    rho = block(0)
    u = np.stack([block(1 + i) for i in range(dim)])
    e = np.stack(
        [np.stack([block(1 + dim + i * dim + j) for j in range(dim)]) for i in range(dim)]
    )

    state = State(
        t=t,
        rho=ScalarField(grid, rho),
        u=VectorField(grid, u),
        E=TensorField(grid, e),
    )
    return Checkpoint(
        state=state, gamma=gamma, mu=mu, mode=_BYTE_MODE[mode_byte], version=version
    )


def read_checkpoint(path: str | Path, *, expect_dim: int | None = None) -> State:
    """Deserialize a checkpoint back into a state (bitwise round trip)."""
    ckpt = _read_checkpoint_full(path)
    if expect_dim is not None and ckpt.state.grid.dim != expect_dim:
        raise CheckpointError(
            f"dimension mismatch: file is {ckpt.state.grid.dim}-D, "
            f"expected {expect_dim}-D"
        )
    return ckpt.state


# --------------------------------------------------------------------------
# Simulation driver
# --------------------------------------------------------------------------

_CSV_COLUMNS = (
    "t",
    "kinetic",
    "elastic_E",
    "elastic_F",
    "potential",
    "dissipation_cum",
    "energy_balance_residual",
    "div_rhoFT_l2",
    "curl_compat_l2",
    "tr_integral",
    "sigma_consistency_l2",
    "z_residual_l2",
    "pressure_poisson_residual_l2",
    "u_l2",
    "u_lq",
    "u_w1q",
    "u_h1semi",
    "rho_m1_l2",
    "rho_m1_lq",
    "rho_m1_w1q",
    "E_l2",
    "E_lq",
    "E_w1q",
    "rho_min",
    "rho_max",
    "cfl",
)


def step_config(cfg: RunConfig) -> StepConfig:
    """The stepper-facing slice of a run config."""
    return StepConfig(
        dt=cfg.dt,
        scheme=cfg.scheme,
        mode=cfg.mode,
        mu=cfg.mu,
        law=PressureLaw(a=1.0, gamma=cfg.gamma),
        use_dealias=cfg.dealias,
    )


def build_initial_state(cfg: RunConfig) -> State:
    """Construct the configured initial state (checkpoints validated)."""
    if cfg.init == "checkpoint":
        ckpt = _read_checkpoint_full(cfg.init_checkpoint)
        grid = ckpt.state.grid
        if grid.dim != cfg.dim:
            raise CheckpointError(
                f"dimension mismatch: checkpoint is {grid.dim}-D, config says {cfg.dim}-D"
            )
        if grid.n != cfg.n:
            raise CheckpointError(
                f"resolution mismatch: checkpoint has n={grid.n}, config says n={cfg.n}"
            )
        return ckpt.state
    grid = Grid(dim=cfg.dim, n=cfg.n, length=cfg.length)
    if cfg.init == "manufactured":
        state, _ = manufactured_fields(standard_spec(cfg.dim), grid, 0.0)
        return state
    return initial_state(grid, cfg.init, delta=cfg.delta, seed=cfg.seed)


def _csv_row(r: DiagnosticsReport, cfl: float) -> str:
    e, c = r.energy, r.constraints
    values = (
        r.time,
        e.kinetic,
        e.elastic_E,
        e.elastic_F,
        e.potential,
        e.dissipation_cum,
        e.balance_residual,
        c.div_rhoFT_l2,
        c.curl_compat_l2,
        r.tr_integral,
        r.sigma_consistency_l2,
        r.z_residual_l2,
        r.pressure_poisson_residual_l2,
        r.u_l2,
        r.u_lq,
        r.u_w1q,
        r.u_h1semi,
        r.rho_m1_l2,
        r.rho_m1_lq,
        r.rho_m1_w1q,
        r.E_l2,
        r.E_lq,
        r.E_w1q,
        r.rho_min,
        r.rho_max,
        cfl,
    )
    return ",".join(format(v, ".17g") for v in values)


def _advective_cfl(s: State, dt: float) -> float:
    umax = float(np.max(np.sqrt(np.sum(s.u.values**2, axis=0))))
    return umax * dt / s.grid.spacing


def _abort_kind(exc: SimulationError) -> str:
    if isinstance(exc, CflError):
        return "CFL abort"
    if isinstance(exc, DensityError):
        return "density abort"
    if isinstance(exc, PressureIterationError):
        return "pressure abort"
    return "numerical abort"


def run_simulation(cfg: RunConfig) -> int:
    """Advance to (absolute) ``t_end``, stream diagnostics, checkpoint the end.

    A checkpoint initial state resumes from its own time, so a split run
    reproduces the single long run state-for-state.  Returns the process
    exit code: 0 on completion, 3 on a numerical abort (the CSV then ends
    with the last good row and an ``# abort:`` trailer naming the reason;
    no checkpoint is written).
    """
    state = build_initial_state(cfg)
    scfg = step_config(cfg)
    forcing: Callable[[float], SystemResidual] | None = None
    if cfg.init == "manufactured":
        spec = standard_spec(cfg.dim)
        grid = state.grid

        def forcing(t: float) -> SystemResidual:
            return manufactured_forcing(spec, grid, t, scfg)

    nsteps = round((cfg.t_end - state.t) / cfg.dt)
    if nsteps < 1:
        raise ConfigError(
            f"t_end = {cfg.t_end} is not at least one step beyond the "
            f"initial time t = {state.t}"
        )
    dissipation = 0.0
    trapezoid = cfg.scheme == "imex2"
    make_row: Callable[[State, float], str] | None = None
    wrote_current = False

    path = Path(cfg.csv_path)
    with path.open("w", encoding="utf-8", newline="") as out:
        out.write(",".join(_CSV_COLUMNS) + "\n")
        try:
            sigma = sigma_init(state)
            reference = energy_report(state, 0.0, law=scfg.law)

            def make_row(s: State, diss: float) -> str:
                rep = report(s, sigma, diss, scfg, reference=reference, q=cfg.q_norm)
                return _csv_row(rep, _advective_cfl(s, cfg.dt))

            out.write(make_row(state, dissipation) + "\n")
            wrote_current = True
            for k in range(nsteps):
                rate_before = viscous_dissipation_rate(state, cfg.mu)
                new_state = step(state, scfg, forcing)
                if trapezoid:
                    rate_after = viscous_dissipation_rate(new_state, cfg.mu)
                    dissipation += 0.5 * cfg.dt * (rate_before + rate_after)
                else:
                    dissipation += cfg.dt * rate_before
                sigma = sigma_step(sigma, state, new_state, scfg)
                state = new_state
                wrote_current = False
                if (k + 1) % cfg.output_every == 0 or k + 1 == nsteps:
                    out.write(make_row(state, dissipation) + "\n")
                    wrote_current = True
        except SimulationError as exc:
            # The CSV stays parseable on every abort path: the last state
            # that produced a row is flushed, then a comment trailer names
            # the reason.  A state that never was valid gets no row.
            reason = f"{_abort_kind(exc)}: {exc}"
            if make_row is not None and not wrote_current:
                out.write(make_row(state, dissipation) + "\n")
            out.write(f"# abort: {reason}\n")
            print(f"numerical abort: {reason}", file=sys.stderr)
            return 3

    write_checkpoint(
        state, cfg.checkpoint_path, gamma=cfg.gamma, mu=cfg.mu, mode=cfg.mode
    )
    print(
        f"run complete: t = {state.t:.6g}, series -> {cfg.csv_path}, "
        f"checkpoint -> {cfg.checkpoint_path}"
    )
    return 0


# --------------------------------------------------------------------------
# Identity checking
# --------------------------------------------------------------------------


def check_identities(cfg: RunConfig) -> tuple[str, int]:
    """Evaluate every structural identity on the configured initial state.

    Returns the report text and an exit status: 0 when every hard
    identity is within its tolerance, 1 otherwise.  Constraint-level
    identities use ``check_tol``; the two reformulation residuals, which
    sit near machine precision on compatible states, use
    ``check_strict_tol``.
    """
    state = build_initial_state(cfg)
    scfg = step_config(cfg)

    checks: list[tuple[str, float, float]] = []
    rep = constraint_report(state, q=cfg.q_norm)
    checks.append(("div(rho F^T) constraint", rep.div_rhoFT_l2, cfg.check_tol))
    checks.append(("curl compatibility", rep.curl_compat_l2, cfg.check_tol))
    checks.append(("grad-rho identity", rep.grad_rho_identity_l2, cfg.check_tol))
    checks.append(
        ("elastic force reduction", rep.force_equivalence_l2, cfg.check_tol)
    )
    if cfg.mode == "incompressible":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConstraintWarning)
            z_res = z_parabolic_residual(state, scfg)
            pp_res = pressure_poisson_residual(state, scfg)
        checks.append(("parabolic reformulation", z_res, cfg.check_strict_tol))
        checks.append(("pressure Poisson", pp_res, cfg.check_strict_tol))

    lines = []
    status = 0
    for name, value, tol in checks:
        ok = value <= tol
        status |= 0 if ok else 1
        lines.append(f"{name:28s} {value:12.5e}  (tol {tol:.1e})  {'PASS' if ok else 'FAIL'}")

    energy = energy_report(state, 0.0, law=scfg.law)
    lines.append(
        f"{'energy ledger':28s} kinetic={energy.kinetic:.6e} "
        f"elastic={energy.elastic_E:.6e} potential={energy.potential:.6e}  INFO"
    )
    return "\n".join(lines), status


# --------------------------------------------------------------------------
# MMS study driver
# --------------------------------------------------------------------------


def run_mms_study(cfg: RunConfig) -> int:
    """Temporal + spatial convergence study on the standard manufactured spec.

    The horizon is ``t_end``; the temporal sweep uses ``horizon / {32, 64,
    128}`` on an ``n = cfg.n`` grid, the spatial sweep runs ``n/4, n/2, n``
    at the finest step.  Errors go to ``csv_path``; fitted orders print to
    stdout.
    """
    spec = standard_spec(cfg.dim)
    scfg = step_config(cfg)
    horizon = cfg.t_end
    dts = [horizon / 32, horizon / 64, horizon / 128]
    ns = sorted({max(8, cfg.n // 4), max(8, cfg.n // 2), cfg.n})
    rep = convergence_study(spec, scfg, dts=dts, ns=ns, horizon=horizon, length=cfg.length)

    with Path(cfg.csv_path).open("w", encoding="utf-8", newline="") as out:
        out.write("study,parameter,rho_error,u_error,E_error\n")
        for i, dt in enumerate(rep.dts):
            out.write(
                f"temporal,{dt:.17g},"
                f"{rep.dt_errors['rho'][i]:.17g},"
                f"{rep.dt_errors['u'][i]:.17g},"
                f"{rep.dt_errors['E'][i]:.17g}\n"
            )
        for i, n in enumerate(rep.ns):
            out.write(
                f"spatial,{n},"
                f"{rep.n_errors['rho'][i]:.17g},"
                f"{rep.n_errors['u'][i]:.17g},"
                f"{rep.n_errors['E'][i]:.17g}\n"
            )

    for name in ("rho", "u", "E"):
        print(f"temporal order {name}: {rep.dt_orders[name]:.3f}")
    print(f"spatial error floor: {rep.spatial_floor():.3e}")
    print(f"errors -> {cfg.csv_path}")
    return 0


# --------------------------------------------------------------------------
# Checkpoint inspection
# --------------------------------------------------------------------------


def describe_checkpoint(path: str | Path) -> str:
    """Human-readable header and field norms of a checkpoint file."""
    ckpt = _read_checkpoint_full(path)
    s = ckpt.state
    grid = s.grid
    rho_dev = s.rho.values - 1.0
    lines = [
        f"checkpoint {path}",
        f"  format version {ckpt.version}",
        f"  grid: {grid.dim}-D, n = {grid.n}, length = {grid.length:.6g}",
        f"  t = {s.t:.17g}",
        f"  gamma = {ckpt.gamma:.6g}, mu = {ckpt.mu:.6g}, mode = {ckpt.mode}",
        f"  |u|_L2 = {lq_norm(s.u):.6e}",
        f"  |rho - 1|_L2 = {lq_norm(ScalarField(grid, rho_dev)):.6e}",
        f"  |E|_L2 = {lq_norm(s.E):.6e}",
        f"  rho range: [{float(np.min(s.rho.values)):.6g}, {float(np.max(s.rho.values)):.6g}]",
    ]
    return "\n".join(lines)


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


def main(argv: Sequence[str] | None = None) -> int:
    """CLI dispatcher.  Returns the process exit code."""
    parser = argparse.ArgumentParser(
        prog="vela",
        description="Pseudo-spectral viscoelastic flow solver with identity diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="advance a configured simulation")
    p_run.add_argument("config", nargs="?", default=None, help="config file path")

    p_mms = sub.add_parser("mms", help="manufactured-solution convergence study")
    p_mms.add_argument("config", nargs="?", default=None, help="config file path")

    p_check = sub.add_parser("check", help="evaluate structural identities")
    p_check.add_argument("config", nargs="?", default=None, help="config file path")

    p_info = sub.add_parser("info", help="inspect a checkpoint file")
    p_info.add_argument("checkpoint", help="checkpoint file path")

    args = parser.parse_args(argv)

    try:
        if args.command == "info":
            print(describe_checkpoint(args.checkpoint))
            return 0
        cfg = _load_config(args.config)
        if args.command == "run":
            return run_simulation(cfg)
        if args.command == "mms":
            return run_mms_study(cfg)
        text, status = check_identities(cfg)
        print(text)
        return status
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
