"""Tests for the exact-identity diagnostics.

Oracles used here, independent of the implementation under test:
analytic integrals of trigonometric fields, the pointwise Frobenius
expansion ``|I + E|^2 = dim + 2 tr E + |E|^2``, a hand-rolled transport
step, the classical constant-density pressure Poisson equation, and --
for both reformulation residuals -- the independently assembled
constraint defect that they must reduce to.
"""

from __future__ import annotations

import numpy as np
import pytest

from conftest import band_limited
from vela.diagnostics import (
    ConstraintWarning,
    DiagnosticsReport,
    EnergyReport,
    SigmaState,
    compute_Z,
    energy_report,
    pressure_poisson_residual,
    report,
    sigma_consistency,
    sigma_init,
    sigma_step,
    tr_integral,
    trace_transport_defect,
    viscous_dissipation_rate,
    z_parabolic_residual,
)
from vela.dynamics import DensityError, StepConfig, momentum_rhs, step
from vela.grid import (
    Grid,
    ScalarField,
    TensorField,
    VectorField,
    dealias_values,
    deriv_values,
    div_values,
    grad_values,
    integrate,
    invlap_meanzero_values,
    lap_values,
    leray_values,
    lq_norm,
    make_grid,
)
from vela.state import (
    PressureLaw,
    State,
    constraint_div_rhoFT,
    equilibrium_state,
    initial_state,
    taylor_green_velocity,
)

TWO_PI = 2.0 * np.pi


def make_state(
    grid: Grid,
    rho: np.ndarray | None = None,
    u: np.ndarray | None = None,
    e: np.ndarray | None = None,
    t: float = 0.0,
) -> State:
    d = grid.dim
    return State(
        t=t,
        rho=ScalarField(grid, np.ones(grid.shape) if rho is None else rho),
        u=VectorField(grid, np.zeros((d,) + grid.shape) if u is None else u),
        E=TensorField(grid, np.zeros((d, d) + grid.shape) if e is None else e),
    )


def run_with_ledger(
    s: State, cfg: StepConfig, nsteps: int
) -> tuple[State, SigmaState, float]:
    """Advance ``nsteps`` while accumulating dissipation with the stepper's
    stage weights (trapezoid for the two-stage scheme, left rectangle for
    the one-stage scheme) and co-evolving sigma."""
    sig = sigma_init(s)
    diss = 0.0
    rate = viscous_dissipation_rate(s, cfg.mu)
    for _ in range(nsteps):
        s_new = step(s, cfg)
        new_rate = viscous_dissipation_rate(s_new, cfg.mu)
        if cfg.scheme == "imex2":
            diss += 0.5 * cfg.dt * (rate + new_rate)
        else:
            diss += cfg.dt * rate
        sig = sigma_step(sig, s, s_new, cfg)
        s, rate = s_new, new_rate
    return s, sig, diss


@pytest.fixture(scope="module")
def grid64() -> Grid:
    return make_grid(dim=2, n=64)


@pytest.fixture(scope="module")
def compatible64(grid64: Grid) -> State:
    return initial_state(grid64, "constraint_compatible", delta=1e-2, seed=0)


# ---------------------------------------------------------------------------
# Energy ledger.
# ---------------------------------------------------------------------------


class TestEnergy:
    def test_equilibrium_all_zero(self, grid2d: Grid) -> None:
        rep = energy_report(equilibrium_state(grid2d), 0.0)
        assert rep.kinetic == 0.0
        assert rep.elastic_E == 0.0
        assert rep.potential == 0.0
        assert rep.dissipation_cum == 0.0
        assert rep.balance_residual == 0.0

    def test_taylor_green_kinetic_is_pi_squared(self, grid2d: Grid) -> None:
        # 0.5 * integral of sin^2 x cos^2 y + cos^2 x sin^2 y = pi^2.
        s = make_state(grid2d, u=taylor_green_velocity(grid2d).values)
        rep = energy_report(s, 0.0)
        assert abs(rep.kinetic - np.pi**2) < 1e-12
        # |F|^2 = |I|^2 = 2 pointwise, so elastic_F = 0.5 * 2 * (2 pi)^2.
        assert abs(rep.elastic_F - TWO_PI**2) < 1e-12
        assert rep.elastic_E == 0.0
        assert abs(rep.potential) < 1e-13

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_frobenius_expansion_invariant(self, grid2d: Grid, seed: int) -> None:
        # Pointwise |I + E|^2 = dim + 2 tr E + |E|^2 integrates to an exact
        # relation between the report entries and the trace integral.
        rho = 1.0 + band_limited(grid2d, (), seed, amplitude=0.1)
        e = band_limited(grid2d, (2, 2), seed + 50, amplitude=0.3)
        s = make_state(grid2d, rho=rho, e=e)
        rep = energy_report(s, 0.0)
        combo = (
            rep.elastic_F
            - rep.elastic_E
            - tr_integral(s)
            - 0.5 * grid2d.dim * integrate(s.rho)
        )
        assert abs(combo) < 1e-12 * max(1.0, rep.elastic_F)

    def test_dissipation_rate_closed_form(self, grid2d: Grid) -> None:
        # For the cellular flow at amplitude a: integral |grad u|^2 = 4 pi^2 a^2.
        s = make_state(grid2d, u=0.5 * taylor_green_velocity(grid2d).values)
        rate = viscous_dissipation_rate(s, mu=0.1)
        assert abs(rate - 0.1 * 4.0 * np.pi**2 * 0.25) < 1e-10

    def test_balance_residual_shrinks_at_second_order(self, grid2d: Grid) -> None:
        s0 = initial_state(grid2d, "taylor_green_perturbed", delta=1e-2, seed=0)
        horizon = 0.032
        residuals = []
        for nsteps in (16, 32):
            cfg = StepConfig(dt=horizon / nsteps, mu=0.1)
            ref = energy_report(s0, 0.0, cfg.law)
            s, _, diss = run_with_ledger(s0, cfg, nsteps)
            rep = energy_report(s, diss, cfg.law, reference=ref)
            residuals.append(abs(rep.balance_residual))
        assert residuals[1] < residuals[0]
        ratio = residuals[0] / residuals[1]
        assert 2.8 < ratio < 5.8

    def test_invalid_report_rejected(self) -> None:
        with pytest.raises(ValueError):
            EnergyReport(-1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            EnergyReport(0.0, 0.0, float("nan"), 0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Trace integral and its transport defect.
# ---------------------------------------------------------------------------


class TestTraceIntegral:
    def test_equilibrium_zero(self, grid2d: Grid) -> None:
        assert tr_integral(equilibrium_state(grid2d)) == 0.0

    def test_constant_isotropic_exact(self, grid2d: Grid) -> None:
        e = np.zeros((2, 2) + grid2d.shape)
        e[0, 0] = 0.3
        e[1, 1] = 0.3
        s = make_state(grid2d, e=e)
        expected = 0.6 * TWO_PI**2
        assert abs(tr_integral(s) - expected) < 1e-12 * expected

    def test_conserved_along_compatible_run(self, grid2d: Grid) -> None:
        s0 = initial_state(grid2d, "constraint_compatible", delta=1e-2, seed=1)
        cfg = StepConfig(dt=1e-3, mu=0.1)
        before = tr_integral(s0)
        s, _, _ = run_with_ledger(s0, cfg, 50)
        drift = abs(tr_integral(s) - before) / max(1.0, abs(before))
        assert drift < 1e-9

    def test_transport_defect_matches_velocity_gradient_source(
        self, grid2d: Grid
    ) -> None:
        # For exact band-limited fields, d/dt(rho tr E) + div(rho u tr E)
        # equals rho (div u + tr(grad(u) E)) identically.
        rho = 1.0 + band_limited(grid2d, (), 21, amplitude=0.1)
        u = band_limited(grid2d, (2,), 22, amplitude=0.3)
        e = band_limited(grid2d, (2, 2), 23, amplitude=0.2)
        s = make_state(grid2d, rho=rho, u=u, e=e)
        cfg = StepConfig(dt=1e-3, use_dealias=False)
        defect = trace_transport_defect(s, cfg)
        gu = np.swapaxes(grad_values(grid2d, u), 0, 1)
        source = rho * (
            div_values(grid2d, u) + np.einsum("ik...,ki...->...", gu, e)
        )
        expected = float(np.sqrt(np.sum(source**2) * grid2d.cell_volume))
        assert abs(defect - expected) < 1e-10 * max(1.0, expected)

    def test_transport_defect_small_for_small_data(self, grid2d: Grid) -> None:
        s = initial_state(grid2d, "constraint_compatible", delta=1e-2, seed=1)
        cfg = StepConfig(dt=1e-3)
        assert trace_transport_defect(s, cfg) < 1e-2


# ---------------------------------------------------------------------------
# Transported log-density gradient.
# ---------------------------------------------------------------------------


class TestSigma:
    def test_unit_density_stays_exactly_zero(self, grid2d: Grid) -> None:
        s_old = make_state(grid2d, u=band_limited(grid2d, (2,), 31))
        s_new = make_state(grid2d, u=band_limited(grid2d, (2,), 32))
        sig = sigma_init(s_old)
        assert not np.any(sig.sigma.values)
        advanced = sigma_step(sig, s_old, s_new, StepConfig(dt=1e-2))
        assert not np.any(advanced.sigma.values)

    def test_equilibrium_consistency_zero(self, grid2d: Grid) -> None:
        s = equilibrium_state(grid2d)
        assert sigma_consistency(sigma_init(s), s) == 0.0

    def test_matches_hand_rolled_heun_step(self, grid2d: Grid) -> None:
        rho = 1.0 + band_limited(grid2d, (), 41, amplitude=0.2)
        s_old = make_state(grid2d, rho=rho, u=band_limited(grid2d, (2,), 42))
        s_new = make_state(grid2d, rho=rho, u=band_limited(grid2d, (2,), 43))
        cfg = StepConfig(dt=2e-3)
        sig = sigma_init(s_old)

        def rhs(u: np.ndarray, sigma: np.ndarray) -> np.ndarray:
            dot = np.einsum("i...,i...->...", u, sigma)
            return -grad_values(grid2d, dealias_values(grid2d, dot))

        r1 = rhs(s_old.u.values, sig.sigma.values)
        predictor = sig.sigma.values + cfg.dt * r1
        r2 = rhs(s_new.u.values, predictor)
        expected = sig.sigma.values + 0.5 * cfg.dt * (r1 + r2)

        got = sigma_step(sig, s_old, s_new, cfg).sigma.values
        np.testing.assert_allclose(got, expected, rtol=0.0, atol=1e-15)

    @pytest.mark.parametrize(
        "scheme, lo, hi", [("imex2", 3.0, 5.5), ("imex1", 1.6, 2.6)]
    )
    def test_consistency_converges_at_scheme_order(
        self, grid2d: Grid, scheme: str, lo: float, hi: float
    ) -> None:
        s0 = initial_state(grid2d, "constraint_compatible", delta=1e-2, seed=1)
        horizon = 0.064
        errs = []
        for nsteps in (16, 32, 64):
            cfg = StepConfig(dt=horizon / nsteps, scheme=scheme, mu=0.1)
            s, sig, _ = run_with_ledger(s0, cfg, nsteps)
            errs.append(sigma_consistency(sig, s))
        assert errs[2] < errs[1] < errs[0]
        for a, b in zip(errs, errs[1:]):
            assert lo < a / b < hi

    def test_requires_positive_density(self, grid2d: Grid) -> None:
        rho = np.ones(grid2d.shape)
        rho[0, 0] = -0.5
        s = make_state(grid2d, rho=rho)
        with pytest.raises(DensityError):
            sigma_init(s)


# ---------------------------------------------------------------------------
# Shifted velocity and its heat-equation identity.
# ---------------------------------------------------------------------------


class TestComputeZ:
    def test_zero_deformation_returns_velocity(self, grid2d: Grid) -> None:
        u = band_limited(grid2d, (2,), 51)
        s = make_state(grid2d, u=u)
        z1, z = compute_Z(s, mu=0.1)
        assert not np.any(z1.values)
        np.testing.assert_array_equal(z.values, u)

    def test_row_divergence_free_deformation_gives_zero(self, grid2d: Grid) -> None:
        # Rows built as rotated gradients have exactly zero divergence, so
        # Z1 vanishes and Z reduces to u = 0.
        psi = band_limited(grid2d, (2,), 52)
        e = np.zeros((2, 2) + grid2d.shape)
        for i in range(2):
            e[i, 0] = deriv_values(grid2d, psi[i], 1)
            e[i, 1] = -deriv_values(grid2d, psi[i], 0)
        s = make_state(grid2d, e=e)
        z1, z = compute_Z(s, mu=0.1)
        assert lq_norm(z1, 2.0) < 1e-12
        assert lq_norm(z, 2.0) < 1e-11

    def test_inverts_laplacian(self, grid2d: Grid) -> None:
        e = band_limited(grid2d, (2, 2), 53)
        s = make_state(grid2d, e=e)
        z1, _ = compute_Z(s, mu=0.7)
        div_e = div_values(grid2d, e)
        back = -lap_values(grid2d, z1.values)
        np.testing.assert_allclose(back, div_e, rtol=0.0, atol=1e-12 * np.max(np.abs(div_e)))

    def test_rejects_nonpositive_viscosity(self, grid2d: Grid) -> None:
        with pytest.raises(ValueError):
            compute_Z(equilibrium_state(grid2d), mu=0.0)


class TestZParabolicResidual:
    def test_equilibrium_exactly_zero(self, grid2d: Grid) -> None:
        assert z_parabolic_residual(equilibrium_state(grid2d), StepConfig(dt=1e-3)) == 0.0

    def test_compatible_state_at_floor(self, compatible64: State) -> None:
        res = z_parabolic_residual(compatible64, StepConfig(dt=1e-3, mu=0.1))
        assert res <= 1e-8

    def test_negative_control_blows_up_and_warns(self, compatible64: State) -> None:
        grid = compatible64.grid
        x = grid.coordinates()
        e = compatible64.E.values.copy()
        e[1, 0] = e[1, 0] + 0.05 * np.sin(x[1])
        bad = make_state(grid, rho=compatible64.rho.values, u=compatible64.u.values, e=e)
        with pytest.warns(ConstraintWarning):
            res = z_parabolic_residual(bad, StepConfig(dt=1e-3, mu=0.1))
        assert res >= 1e-3

    def test_reduces_to_constraint_defect(self, grid2d: Grid) -> None:
        # Independent dual route: without dealiasing the assembled residual
        # equals the constraint defect div(rho F^T) array from the state
        # module, to round-off, even far from compatibility.
        rho = 1.0 + band_limited(grid2d, (), 61, amplitude=0.05)
        u = band_limited(grid2d, (2,), 62, amplitude=0.3)
        e = band_limited(grid2d, (2, 2), 63, amplitude=0.2)
        s = make_state(grid2d, rho=rho, u=u, e=e)
        cfg = StepConfig(dt=1e-3, mu=0.3, use_dealias=False)

        from vela.diagnostics import _z_residual_values

        with pytest.warns(ConstraintWarning):
            z_parabolic_residual(s, cfg)
        du, q = momentum_rhs(s, cfg)
        res = _z_residual_values(s, cfg, du.values, q.values)
        defect = constraint_div_rhoFT(s).values
        scale = np.max(np.abs(defect))
        np.testing.assert_allclose(res, defect, rtol=0.0, atol=1e-10 * scale)

    def test_compressible_mode_rejected(self, grid2d: Grid) -> None:
        cfg = StepConfig(dt=1e-3, mode="compressible")
        with pytest.raises(ValueError):
            z_parabolic_residual(equilibrium_state(grid2d), cfg)


# ---------------------------------------------------------------------------
# Divergence of the momentum balance.
# ---------------------------------------------------------------------------


class TestPressurePoisson:
    def test_equilibrium_exactly_zero(self, grid2d: Grid) -> None:
        res = pressure_poisson_residual(equilibrium_state(grid2d), StepConfig(dt=1e-3))
        assert res == 0.0

    def test_compatible_state_at_floor(self, compatible64: State) -> None:
        res = pressure_poisson_residual(compatible64, StepConfig(dt=1e-3, mu=0.1))
        assert res <= 1e-8

    def test_negative_control_blows_up_and_warns(self, compatible64: State) -> None:
        grid = compatible64.grid
        x = grid.coordinates()
        e = compatible64.E.values.copy()
        e[1, 0] = e[1, 0] + 0.05 * np.sin(x[1])
        bad = make_state(grid, rho=compatible64.rho.values, u=compatible64.u.values, e=e)
        with pytest.warns(ConstraintWarning):
            res = pressure_poisson_residual(bad, StepConfig(dt=1e-3, mu=0.1))
        assert res >= 1e-3

    def test_classical_constant_density_oracle(self, grid2d: Grid) -> None:
        # With unit density and no deformation the assembly must reproduce
        # the classical relation lap p = -div div(u x u) for the cellular
        # flow, whose multiplier is (cos 2x + cos 2y)/4.
        u = taylor_green_velocity(grid2d).values
        s = make_state(grid2d, u=u)
        cfg = StepConfig(dt=1e-3, mu=0.1)
        du, q = momentum_rhs(s, cfg)
        x = grid2d.coordinates()
        closed_form = 0.25 * (np.cos(2.0 * x[0]) + np.cos(2.0 * x[1]))
        assert np.max(np.abs(q.values - closed_form)) < 1e-8
        uu = u[:, None] * u[None, :]
        classical = invlap_meanzero_values(
            grid2d, div_values(grid2d, div_values(grid2d, dealias_values(grid2d, uu)))
        )
        assert np.max(np.abs(q.values - classical)) < 1e-8
        res = pressure_poisson_residual(s, cfg, du_dt=du, multiplier=q)
        assert res < 1e-11

    def test_reduces_to_twice_divergence_of_constraint(self, grid2d: Grid) -> None:
        rho = 1.0 + band_limited(grid2d, (), 71, amplitude=0.05)
        u = leray_values(grid2d, band_limited(grid2d, (2,), 72, amplitude=0.3))
        e = band_limited(grid2d, (2, 2), 73, amplitude=0.2)
        s = make_state(grid2d, rho=rho, u=u, e=e)
        cfg = StepConfig(dt=1e-3, mu=0.3, use_dealias=False)

        from vela.diagnostics import _pressure_poisson_values

        du, q = momentum_rhs(s, cfg)
        res = _pressure_poisson_values(s, cfg, du.values, q.values)
        expected = 2.0 * div_values(grid2d, constraint_div_rhoFT(s).values)
        scale = np.max(np.abs(expected))
        np.testing.assert_allclose(res, expected, rtol=0.0, atol=1e-8 * scale)

    def test_compressible_mode_rejected(self, grid2d: Grid) -> None:
        cfg = StepConfig(dt=1e-3, mode="compressible")
        with pytest.raises(ValueError):
            pressure_poisson_residual(equilibrium_state(grid2d), cfg)


# ---------------------------------------------------------------------------
# Aggregated report.
# ---------------------------------------------------------------------------


class TestReport:
    def test_equilibrium_report(self, grid2d: Grid) -> None:
        s = equilibrium_state(grid2d)
        rep = report(s, sigma_init(s), 0.0, StepConfig(dt=1e-3))
        assert rep.time == 0.0
        assert rep.energy.balance_residual == 0.0
        assert rep.constraints.div_rhoFT_l2 == 0.0
        assert rep.tr_integral == 0.0
        assert rep.sigma_consistency_l2 == 0.0
        assert rep.z_residual_l2 == 0.0
        assert rep.pressure_poisson_residual_l2 == 0.0
        assert rep.u_l2 == 0.0
        assert rep.rho_m1_l2 == 0.0
        assert rep.E_w1q == 0.0
        assert rep.rho_min == 1.0
        assert rep.rho_max == 1.0

    def test_small_data_report_fields(self, compatible64: State) -> None:
        s = compatible64
        rep = report(s, sigma_init(s), 0.0, StepConfig(dt=1e-3, mu=0.1))
        for name in (
            "u_l2", "u_lq", "u_w1q", "u_h1semi", "rho_m1_l2", "rho_m1_lq",
            "rho_m1_w1q", "E_l2", "E_lq", "E_w1q",
        ):
            value = getattr(rep, name)
            assert np.isfinite(value) and value > 0.0
        assert rep.z_residual_l2 <= 1e-8
        assert rep.pressure_poisson_residual_l2 <= 1e-8
        assert 0.0 < rep.rho_min < 1.0 < rep.rho_max
        assert rep.sigma_consistency_l2 == 0.0
        assert rep.constraints.curl_compat_l2 < 1e-8

    def test_compressible_mode_marks_identities_nan(self, grid2d: Grid) -> None:
        s = initial_state(grid2d, "constraint_compatible", delta=1e-2, seed=1)
        cfg = StepConfig(dt=1e-3, mode="compressible")
        rep = report(s, sigma_init(s), 0.0, cfg)
        assert np.isnan(rep.z_residual_l2)
        assert np.isnan(rep.pressure_poisson_residual_l2)
        assert np.isfinite(rep.u_l2)

    def test_invalid_report_rejected(self, grid2d: Grid) -> None:
        s = equilibrium_state(grid2d)
        rep = report(s, sigma_init(s), 0.0, StepConfig(dt=1e-3))
        kwargs = {f: getattr(rep, f) for f in rep.__dataclass_fields__}
        kwargs["rho_min"] = 0.0
        with pytest.raises(ValueError):
            DiagnosticsReport(**kwargs)
        kwargs = {f: getattr(rep, f) for f in rep.__dataclass_fields__}
        kwargs["u_l2"] = -1.0
        with pytest.raises(ValueError):
            DiagnosticsReport(**kwargs)
