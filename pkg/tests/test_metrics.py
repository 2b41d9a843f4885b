import numpy as np
import pytest

from dataclasses import replace

from kinetic_gpc import metrics
from kinetic_gpc.gpc_basis import build_basis, eval_basis, gauss_rule
from kinetic_gpc.solver import (StateSG, build_operators, build_ensemble,
                                build_spatial_grid, default_scenario,
                                initial_state, micromacro_dt, run_scenario)


NX = 16
DX = 2 * np.pi / NX


class TestGammaNorm:
    def test_equilibrium_norm_is_sqrt_length(self, vgrid16):
        field = np.ones((NX, 16, 1))
        val = metrics.gamma_norm(field, DX, vgrid16)
        assert abs(val**2 - 2 * np.pi) <= 1e-12

    def test_velocity_mode_norm(self, vgrid16):
        field = np.zeros((NX, 16, 1))
        field[:, :, 0] = vgrid16.nodes[None, :]
        val = metrics.gamma_norm(field, DX, vgrid16)
        assert abs(val**2 - 2 * np.pi) <= 1e-12

    def test_mode_parseval_against_collocation(self, vgrid16, rng):
        # oracle: sample the chaos field at the reference nodes and integrate
        basis = build_basis("legendre", 5)
        field = rng.standard_normal((NX, 16, 5))
        ref = gauss_rule("legendre", 40)
        psi = eval_basis("legendre", 5, ref.nodes)
        samples = np.einsum("qk,xik->qxi", psi, field)
        a = metrics.gamma_norm(field, DX, vgrid16)
        b = metrics.gamma_norm_samples(samples, ref, DX, vgrid16)
        assert abs(a - b) <= 1e-10 * max(1.0, a)


class TestGammaKNorm:
    def test_z_constant_field_unchanged(self, vgrid16, legendre8, rng):
        from kinetic_gpc.gpc_basis import z_derivative_matrix
        dz = z_derivative_matrix(legendre8)
        field = np.zeros((NX, 16, 8))
        field[:, :, 0] = rng.standard_normal((NX, 16))
        base = metrics.gamma_norm(field, DX, vgrid16)
        for k in (1, 2, 3):
            val = metrics.gamma_k_norm(field, dz, k, DX, vgrid16)
            assert abs(val - base) <= 1e-13 * max(1.0, base)

    def test_first_degree_mode_factor(self, vgrid16, legendre8, rng):
        # d/dz of the degree-one function contributes three times its norm
        from kinetic_gpc.gpc_basis import z_derivative_matrix
        dz = z_derivative_matrix(legendre8)
        field = np.zeros((NX, 16, 8))
        field[:, :, 1] = rng.standard_normal((NX, 16))
        base = metrics.gamma_norm(field, DX, vgrid16)
        val = metrics.gamma_k_norm(field, dz, 1, DX, vgrid16)
        assert abs(val**2 - 4 * base**2) <= 1e-11 * max(1.0, base**2)

    def test_against_finite_differences_in_z(self, vgrid16, rng):
        # oracle: centered second difference of collocation samples on a
        # fine uniform z-lattice
        basis = build_basis("legendre", 5)
        from kinetic_gpc.gpc_basis import z_derivative_matrix
        dz_mat = z_derivative_matrix(basis)
        field = rng.standard_normal((4, 16, 5))
        second = metrics.apply_z_derivative(field, dz_mat, 2)
        zs = np.linspace(-0.9, 0.9, 2001)
        hstep = zs[1] - zs[0]
        psi = eval_basis("legendre", 5, zs)
        samples = np.einsum("qk,xik->qxi", psi, field)
        fd = (samples[2:] - 2 * samples[1:-1] + samples[:-2]) / hstep**2
        psi_mid = psi[1:-1]
        # compare pointwise at interior lattice nodes
        recon = np.einsum("qk,xik->qxi", psi_mid, second)
        assert np.max(np.abs(recon - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))


class TestDefectNorm:
    def test_local_equilibrium_zero(self, vgrid16):
        field = np.ones((NX, 16, 2))
        assert metrics.defect_norm(field, DX, vgrid16) <= 1e-14

    def test_velocity_mode_keeps_full_norm(self, vgrid16):
        field = np.zeros((NX, 16, 1))
        field[:, :, 0] = vgrid16.nodes[None, :]
        full = metrics.gamma_norm(field, DX, vgrid16)
        assert abs(metrics.defect_norm(field, DX, vgrid16) - full) <= 1e-13

    def test_state_defect_equals_scaled_fluctuation(self, vgrid16):
        scn = default_scenario(nx=NX, init=replace(default_scenario().init,
                                                   delta=0.5), eps=0.25)
        ops = build_operators(scn)
        state = initial_state(scn, ops)
        lhs = metrics.state_defect_norm(state, ops.xgrid.dx, vgrid16)
        rhs = scn.eps * metrics.gamma_norm(state.g, ops.xgrid.dx, vgrid16)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, rhs)


@pytest.fixture(scope="module")
def small_problem():
    scn = default_scenario(nx=16, nv=8, k_gpc=4, t_end=0.1)
    ops = build_operators(scn)
    rule = gauss_rule("legendre", 16)
    dt = micromacro_dt(ops, scn.eps)
    ens = build_ensemble(scn, ops, rule, dt, scn.t_end)
    res = run_scenario(scn, ops=ops, dt=dt, diag_every=0)
    return scn, ops, rule, ens, res


class TestSgError:

    def test_projected_ensemble_has_zero_galerkin_error(self, small_problem):
        scn, ops, rule, ens, _ = small_problem
        rho_m, g_m = metrics.project_ensemble(ens, 4)
        state = StateSG(rho=rho_m, g=g_m, t=scn.t_end, eps=scn.eps)
        err = metrics.sg_error(state, ens, ops.xgrid.dx, ops.vgrid)
        assert err.galerkin <= 1e-12

    def test_z_independent_setup_exact_for_any_k(self):
        from kinetic_gpc.collision import constant_kernel
        scn = default_scenario(kernel=constant_kernel(1.0), nx=16, nv=8,
                               k_gpc=3, t_end=0.1,
                               init=replace(default_scenario().init, alpha=0.0))
        ops = build_operators(scn)
        rule = gauss_rule("legendre", 12)
        dt = micromacro_dt(ops, scn.eps)
        ens = build_ensemble(scn, ops, rule, dt, scn.t_end)
        res = run_scenario(scn, ops=ops, dt=dt, diag_every=0)
        err = metrics.sg_error(res.state, ens, ops.xgrid.dx, ops.vgrid,
                               run_meta=res.meta)
        assert err.total <= 1e-12

    def test_pythagoras_split(self, small_problem):
        scn, ops, rule, ens, res = small_problem
        err = metrics.sg_error(res.state, ens, ops.xgrid.dx, ops.vgrid,
                               run_meta=res.meta)
        gap = abs(err.total**2 - err.projection**2 - err.galerkin**2)
        assert gap <= 1e-10 * max(1.0, err.total**2)

    def test_projection_error_monotone_in_k(self, small_problem):
        scn, ops, rule, ens, _ = small_problem
        vals = []
        for k in (1, 2, 3, 4):
            rho_m, g_m = metrics.project_ensemble(ens, k)
            state = StateSG(rho=rho_m, g=g_m, t=scn.t_end, eps=scn.eps)
            vals.append(metrics.sg_error(state, ens, ops.xgrid.dx,
                                         ops.vgrid).projection)
        assert all(b <= a + 1e-14 for a, b in zip(vals, vals[1:]))

    def test_discretization_mismatch_rejected(self, small_problem):
        scn, ops, rule, ens, res = small_problem
        meta = dict(res.meta)
        meta["dt"] = meta["dt"] * 0.5
        with pytest.raises(ValueError, match="mismatch"):
            metrics.sg_error(res.state, ens, ops.xgrid.dx, ops.vgrid,
                             run_meta=meta)

    def test_reference_rule_size_guard(self, small_problem, vgrid16):
        scn, ops, rule, ens, res = small_problem
        small_rule = gauss_rule("legendre", 6)
        tiny = metrics.CollocationEnsemble(rule=small_rule, family="legendre",
                                           rho=ens.rho[:6], g=ens.g[:6],
                                           eps=scn.eps, meta=ens.meta)
        with pytest.raises(ValueError, match="too small"):
            metrics.sg_error(res.state, tiny, ops.xgrid.dx, ops.vgrid)


class TestSlopeFit:
    def test_exact_power_law(self):
        x = np.array([0.5, 0.25, 0.125])
        y = 3.0 * x**1.7
        assert abs(metrics.fit_loglog_slope(x, y) - 1.7) <= 1e-12
