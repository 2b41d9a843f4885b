import numpy as np
import pytest

from dataclasses import replace

from kinetic_gpc.collision import (affine_z_kernel, collision_matrix_colloc,
                                   constant_kernel)
from kinetic_gpc.solver import (CFLError, MicroMacroStepper, ResolvedState, Scenario,
                                StateSG, build_operators, build_spatial_grid,
                                default_scenario, initial_state, micromacro_dt,
                                micromacro_step, resolved_dt, resolved_step_colloc,
                                run_scenario)


@pytest.fixture(scope="module")
def default_ops():
    scn = default_scenario()
    return scn, build_operators(scn)


class TestGridAndScenario:
    def test_grid_rejects_odd_or_tiny(self):
        with pytest.raises(ValueError):
            build_spatial_grid(7)
        with pytest.raises(ValueError):
            build_spatial_grid(2)

    def test_staggering_offsets(self):
        grid = build_spatial_grid(8)
        assert np.allclose(grid.interfaces - grid.centers, grid.dx / 2)

    def test_scenario_positivity_rule(self):
        scn = default_scenario()
        bad = replace(scn, init=replace(scn.init, c1=0.9))
        with pytest.raises(ValueError):
            bad.validate()

    def test_scenario_requires_positive_eps(self):
        with pytest.raises(ValueError):
            default_scenario(eps=0.0).validate()

    def test_kernel_validation_gate(self):
        scn = default_scenario(
            kernel=affine_z_kernel(1.0, 1.5, sigma_min=0.5, sigma_max=2.5))
        with pytest.raises(ValueError, match="sigma_min"):
            build_operators(scn)


class TestMicroMacroStep:
    def test_uniform_equilibrium_is_fixed_point(self, default_ops):
        scn, ops = default_ops
        rho = np.tile(np.array([1.0, 0.3, 0.0, 0.1, 0, 0, 0, 0]), (scn.nx, 1))
        state = StateSG(rho=rho.copy(), g=np.zeros((scn.nx, scn.nv, 8)),
                        t=0.0, eps=1.0)
        out = micromacro_step(state, ops.sg_op, ops.xgrid, 2e-3)
        assert np.max(np.abs(out.rho - rho)) <= 1e-14
        assert np.max(np.abs(out.g)) <= 1e-14

    def test_relaxation_closed_form_exact(self):
        # uniform state, constant kernel: the implicit update divides the
        # fluctuation by (1 + sigma0 dt / eps^2) each step, exactly
        scn = default_scenario(kernel=constant_kernel(1.0), nx=8, nv=8,
                               k_gpc=2, eps=0.5)
        ops = build_operators(scn)
        g0 = np.zeros((8, 8, 2))
        g0[:, :, 0] = ops.vgrid.nodes[None, :]
        state = StateSG(rho=np.ones((8, 2)), g=g0.copy(), t=0.0, eps=0.5)
        dt, n = 0.01, 25
        stepper = MicroMacroStepper(ops.sg_op, ops.xgrid, 0.5, dt)
        for _ in range(n):
            state = stepper.step(state)
        factor = (1.0 + dt / 0.25)**(-n)
        assert np.max(np.abs(state.g - g0 * factor)) <= 1e-12
        assert np.max(np.abs(state.rho - 1.0)) <= 1e-13

    def test_mass_conserved_every_step(self, default_ops, rng):
        scn, ops = default_ops
        state = initial_state(scn, ops)
        state.g += 0.1 * rng.standard_normal(state.g.shape)
        state.g -= np.einsum("i,xik->xk", ops.vgrid.weights, state.g)[:, None, :]
        stepper = MicroMacroStepper(ops.sg_op, ops.xgrid, scn.eps, 1e-3)
        mass0 = state.rho.sum(axis=0)
        for _ in range(20):
            state = stepper.step(state)
        assert np.max(np.abs(state.rho.sum(axis=0) - mass0)) <= 1e-12 * abs(mass0[0])

    def test_zero_average_constraint_enforced(self, default_ops, rng):
        scn, ops = default_ops
        state = initial_state(scn, ops)
        state.g += rng.standard_normal(state.g.shape)  # deliberately dirty
        stepper = MicroMacroStepper(ops.sg_op, ops.xgrid, scn.eps, 1e-3)
        out = stepper.step(state)
        avg = np.einsum("i,xik->xk", ops.vgrid.weights, out.g)
        assert np.max(np.abs(avg)) <= 1e-11


class TestResolvedScheme:
    def test_uniform_state_unchanged(self, vgrid16):
        xgrid = build_spatial_grid(16)
        op = collision_matrix_colloc(constant_kernel(1.0), vgrid16, 0.0)
        state = ResolvedState(h=np.ones((16, 16)), z=0.0, t=0.0, eps=1.0)
        out = resolved_step_colloc(state, op, vgrid16, xgrid, 1e-3)
        assert np.max(np.abs(out.h - 1.0)) <= 1e-14

    def test_homogeneous_relaxation_order_two(self, vgrid16):
        # oracle: h(t) = Pi h0 + e^{-t} (h0 - Pi h0) for a unit constant kernel
        xgrid = build_spatial_grid(8)
        op = collision_matrix_colloc(constant_kernel(1.0), vgrid16, 0.0)
        h0 = 1.0 + vgrid16.nodes[None, :] * np.ones((8, 1))
        exact = 1.0 + np.exp(-0.5) * vgrid16.nodes
        errs = []
        for nsteps in (16, 32, 64):
            state = ResolvedState(h=h0.copy(), z=0.0, t=0.0, eps=1.0)
            dt = 0.5 / nsteps
            for _ in range(nsteps):
                state = resolved_step_colloc(state, op, vgrid16, xgrid, dt)
            errs.append(np.max(np.abs(state.h[0] - exact)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(orders - 2.0) <= 0.2)

    def test_cfl_violation_raises(self, vgrid16):
        xgrid = build_spatial_grid(16)
        spec = constant_kernel(1.0)
        op = collision_matrix_colloc(spec, vgrid16, 0.0)
        state = ResolvedState(h=np.ones((16, 16)), z=0.0, t=0.0, eps=0.1)
        bound = resolved_dt(spec, xgrid, vgrid16, 0.1)
        with pytest.raises(CFLError):
            resolved_step_colloc(state, op, vgrid16, xgrid, 3 * bound)

    def test_cost_guard(self):
        scn = default_scenario(eps=1e-3, scheme="resolved_colloc", nx=8, nv=8,
                               k_gpc=2)
        ops = build_operators(scn)
        with pytest.raises(ValueError, match="expensive"):
            run_scenario(scn, ops=ops, t_end=1e-4)

    def test_cross_scheme_agreement(self):
        # micro-macro and resolved solve the same collocation problem at a
        # fixed z; with each scheme under its own step rule the densities
        # agree to first-order accuracy
        scn = default_scenario(nx=64, eps=0.5, k_gpc=2)
        ops = build_operators(scn)
        res_mm = run_scenario(scn, ops=ops, scheme="micromacro_colloc",
                              z_value=0.0, t_end=0.2, diag_every=0)
        res_rs = run_scenario(scn, ops=ops, scheme="resolved_colloc",
                              z_value=0.0, t_end=0.2, diag_every=0)
        rho_mm = res_mm.state.rho[:, 0]
        rho_rs = res_rs.state.h @ ops.vgrid.weights
        dist = np.linalg.norm(rho_mm - rho_rs) / np.linalg.norm(rho_rs)
        assert dist <= 2e-2


class TestRunScenario:
    def test_zero_time_echoes_initial_state(self, default_ops):
        scn, ops = default_ops
        res = run_scenario(scn, ops=ops, t_end=0.0)
        ref = initial_state(scn, ops)
        assert res.n_steps == 0
        assert np.array_equal(res.state.rho, ref.rho)
        assert len(res.diagnostics) == 1

    def test_step_rounded_to_hit_t_end(self, default_ops):
        scn, ops = default_ops
        res = run_scenario(scn, ops=ops, t_end=0.1)
        assert abs(res.state.t - 0.1) <= 1e-12
        assert abs(res.dt * res.n_steps - 0.1) <= 1e-12

    def test_energy_dissipation_default(self, default_ops):
        scn, ops = default_ops
        res = run_scenario(scn, ops=ops, t_end=0.3)
        energy = np.array([row["gamma_norm"] for row in res.diagnostics])
        assert np.max(np.diff(energy)) <= 1e-10

    def test_ap_fixed_step_property(self):
        # one parabolic step shared verbatim across scales: no blowup, no
        # mass drift
        scn = default_scenario()
        ops = build_operators(scn)
        dmax = np.max(np.linalg.eigvalsh(ops.d_exact))
        dt = scn.cfl * ops.xgrid.dx**2 / (2 * dmax)
        for eps in (1.0, 1e-2, 1e-4, 1e-6):
            res = run_scenario(replace(scn, eps=eps), ops=None, dt=dt, t_end=0.5,
                               diag_every=0)
            masses = [row["mass_mode0"] for row in res.diagnostics]
            assert np.isfinite(res.diagnostics[-1]["gamma_norm"])
            assert abs(masses[-1] - masses[0]) <= 1e-10 * abs(masses[0])

    def test_defect_halving_under_scale_halving(self):
        scn = default_scenario(init=replace(default_scenario().init, delta=0.5))
        defects = {}
        for eps in (0.25, 0.125):
            res = run_scenario(replace(scn, eps=eps), t_end=0.5, diag_every=0)
            defects[eps] = res.diagnostics[-1]["defect_norm"]
        ratio = defects[0.25] / defects[0.125]
        assert 1.6 <= ratio <= 2.4

    def test_mass_conserved_all_schemes(self):
        scn = default_scenario(nx=16, nv=8, k_gpc=3, eps=0.5)
        ops = build_operators(scn)
        for scheme in ("micromacro_sg", "micromacro_colloc", "resolved_colloc"):
            res = run_scenario(scn, ops=ops, scheme=scheme, t_end=0.05,
                               z_value=0.2)
            masses = np.array([row["mass_mode0"] for row in res.diagnostics])
            drift = np.max(np.abs(masses - masses[0])) / abs(masses[0])
            assert drift <= 1e-10, scheme

    def test_verified_step_is_scale_independent_when_small(self, default_ops):
        scn, ops = default_ops
        dts = [micromacro_dt(ops, eps) for eps in (1e-4, 1e-6)]
        assert dts[0] == dts[1]
