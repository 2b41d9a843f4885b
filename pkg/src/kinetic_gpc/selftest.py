"""Built-in invariant suite: quadrature, orthonormality, operator structure.

Each check is a pure function returning (name, passed, detail).  The CLI
prints one PASS/FAIL line per check; the test suite reuses the same
functions.  Kernels may be injected so a misdeclared bound is caught by
the coercivity checks rather than silently accepted.
"""

from __future__ import annotations

import numpy as np

from . import metrics
from .collision import (affine_z_kernel, anisotropic_gaussian_kernel,
                        collision_matrix_colloc, collision_tensor_sg,
                        constant_kernel, nonlinear_z_kernel, validate_kernel)
from .diffusion import assemble_exact_D, assemble_frequency_D
from .gpc_basis import build_basis, gauss_rule, gram_matrix, multiply_by_z, project
from .solver import (StateSG, build_operators, build_spatial_grid, default_scenario,
                     initial_state, micromacro_step)
from .velocity import build_velocity_grid, gaussian_moment, moment, pi_project


def default_test_kernels():
    return (
        constant_kernel(1.0),
        affine_z_kernel(1.0, 0.5),
        anisotropic_gaussian_kernel(1.0, 0.2, 0.3, 0.5),
        nonlinear_z_kernel(2.0, 0.5),
    )


def check_quadrature_exactness():
    # random polynomials of full exactness degree; error measured relative
    # to the conditioning scale sum_p |c_p| int |z|^p
    rng = np.random.default_rng(3)
    worst = 0.0
    q = 12
    for family in ("legendre", "hermite"):
        rule = gauss_rule(family, q)
        powers = np.arange(2 * q)
        if family == "legendre":
            exact_moments = np.where(powers % 2 == 0, 1.0 / (powers + 1.0), 0.0)
        else:
            exact_moments = np.array([gaussian_moment(int(p)) for p in powers])
        abs_scale = np.array([float(np.sum(rule.weights * np.abs(rule.nodes)**p))
                              for p in powers])
        for _ in range(20):
            coeffs = rng.standard_normal(2 * q)
            vals = np.polynomial.polynomial.polyval(rule.nodes, coeffs)
            quad = float(np.sum(rule.weights * vals))
            exact = float(np.dot(coeffs, exact_moments))
            scale = max(1.0, float(np.dot(np.abs(coeffs), abs_scale)))
            worst = max(worst, abs(quad - exact) / scale)
    return worst <= 1e-10, f"max relative integration error {worst:.3e}"


def check_orthonormality():
    worst = 0.0
    for family in ("legendre", "hermite"):
        basis = build_basis(family, 20, 40)
        worst = max(worst, float(np.max(np.abs(gram_matrix(basis) - np.eye(20)))))
    return worst <= 1e-12, f"max Gram deviation {worst:.3e}"


def check_velocity_moments():
    # even moments match (p-1)!!; odd moments vanish relative to the
    # cancellation scale int |v|^p
    grid = build_velocity_grid(16)
    worst = 0.0
    ones = np.ones(grid.nv)
    for p in range(0, 2 * grid.nv - 1):
        val = float(moment(ones, p, grid))
        if p % 2 == 0:
            exact = gaussian_moment(p)
            worst = max(worst, abs(val - exact) / max(1.0, abs(exact)))
        else:
            scale = float(np.sum(grid.weights * np.abs(grid.nodes)**p))
            worst = max(worst, abs(val) / max(1.0, scale))
    return worst <= 1e-11, f"max relative moment error {worst:.3e}"


def check_projection_idempotent():
    rng = np.random.default_rng(11)
    basis = build_basis("legendre", 8)
    coeffs = rng.standard_normal(8)
    vals = basis.psi @ coeffs
    back = project(vals, basis)
    err = float(np.max(np.abs(back - coeffs)))
    return err <= 1e-12, f"round-trip error {err:.3e}"


def check_multiply_by_z_structure():
    worst = 0.0
    for family in ("legendre", "hermite"):
        basis = build_basis(family, 10)
        mz = multiply_by_z(basis)
        worst = max(worst, float(np.max(np.abs(mz - mz.T))))
        off = np.abs(np.triu(mz, 2))
        worst = max(worst, float(off.max()) if off.size else 0.0)
    return worst <= 1e-13, f"max symmetry/bandwidth violation {worst:.3e}"


def check_coercivity_colloc(kernels=None):
    from .collision import sigma_eval
    kernels = kernels or default_test_kernels()
    grid = build_velocity_grid(16)
    rng = np.random.default_rng(23)
    worst_margin = np.inf
    worst_identity = 0.0
    for spec in kernels:
        for z in np.linspace(-1.0, 1.0, 10):
            op = collision_matrix_colloc(spec, grid, z)
            sig = sigma_eval(spec, grid.nodes[:, None], grid.nodes[None, :], z)
            h = rng.standard_normal((100, grid.nv))
            quad = np.einsum("i,ri,ri->r", grid.weights, h, h @ op.matrix.T)
            hdiff = h[:, :, None] - h[:, None, :]
            ident = -0.5 * np.einsum("i,j,ij,rij->r", grid.weights, grid.weights,
                                     sig, hdiff**2)
            worst_identity = max(worst_identity, float(np.max(np.abs(quad - ident))))
            avg = h @ grid.weights
            dist2 = np.einsum("i,ri->r", grid.weights, (h - avg[:, None])**2)
            margin = float(np.min(-spec.sigma_min * dist2 - quad))
            worst_margin = min(worst_margin, margin)
    ok = worst_margin >= -1e-10 and worst_identity <= 1e-12
    return ok, (f"min coercivity margin {worst_margin:.3e}, "
                f"identity residual {worst_identity:.3e}")


def check_coercivity_sg(kernels=None):
    kernels = kernels or default_test_kernels()
    grid = build_velocity_grid(16)
    basis = build_basis("legendre", 6)
    rng = np.random.default_rng(37)
    worst = np.inf
    for spec in kernels:
        op = collision_tensor_sg(spec, grid, basis)
        for _ in range(20):
            h = rng.standard_normal((grid.nv, basis.k))
            qh = op.apply(h)
            quad = float(np.einsum("i,ik,ik->", grid.weights, h, qh))
            avg = np.einsum("i,ik->k", grid.weights, h)
            dist2 = float(np.einsum("i,ik->", grid.weights, (h - avg[None, :])**2))
            worst = min(worst, -spec.sigma_min * dist2 - quad)
    return worst >= -1e-10, f"min coercivity margin {worst:.3e}"


def check_sg_null_space(kernels=None):
    kernels = kernels or default_test_kernels()
    grid = build_velocity_grid(12)
    basis = build_basis("legendre", 5)
    detail = []
    ok = True
    for spec in kernels:
        op = collision_tensor_sg(spec, grid, basis)
        evals = np.linalg.eigvalsh(0.5 * (op.symmetrized() + op.symmetrized().T))
        n_zero = int(np.sum(np.abs(evals) < 1e-9))
        rest = evals[np.abs(evals) >= 1e-9]
        bound = float(np.max(rest)) if rest.size else -np.inf
        if n_zero != basis.k or bound > -spec.sigma_min + 1e-9:
            ok = False
        detail.append(f"{spec.family}: {n_zero} null, max nonzero {bound:.3e}")
    return ok, "; ".join(detail)


def check_mass_conservation_operator(kernels=None):
    kernels = kernels or default_test_kernels()
    grid = build_velocity_grid(16)
    basis = build_basis("legendre", 6)
    rng = np.random.default_rng(5)
    worst = 0.0
    for spec in kernels:
        op = collision_tensor_sg(spec, grid, basis)
        h = rng.standard_normal((grid.nv, basis.k))
        qh = op.apply(h)
        worst = max(worst, float(np.max(np.abs(
            np.einsum("i,ik->k", grid.weights, qh)))))
    return worst <= 1e-13, f"max per-mode mass residual {worst:.3e}"


def check_pi_projection():
    grid = build_velocity_grid(16)
    rng = np.random.default_rng(7)
    h = rng.standard_normal((4, grid.nv, 3))
    ph = pi_project(h, grid, v_axis=1)
    pph = pi_project(ph, grid, v_axis=1)
    scale = max(1.0, float(np.max(np.abs(ph))))
    idem = float(np.max(np.abs(pph - ph))) / scale
    ortho = float(np.max(np.abs(np.einsum("i,xik,xik->xk", grid.weights,
                                          h - ph, ph))))
    ok = idem <= 1e-15 and ortho <= 1e-13
    return ok, f"idempotency {idem:.1e} (roundoff), orthogonality {ortho:.3e}"


def check_pythagoras_split():
    import kinetic_gpc.solver as solver
    scn = default_scenario(nx=16, nv=8, k_gpc=4, t_end=0.1)
    ops = build_operators(scn)
    rule = gauss_rule("legendre", 16)
    dt = solver.micromacro_dt(ops, scn.eps)
    ens = solver.build_ensemble(scn, ops, rule, dt, scn.t_end)
    res = solver.run_scenario(scn, ops=ops, dt=dt, diag_every=0)
    err = metrics.sg_error(res.state, ens, ops.xgrid.dx, ops.vgrid,
                           run_meta=res.meta)
    gap = abs(err.total**2 - err.projection**2 - err.galerkin**2)
    return gap <= 1e-10, (f"|total^2 - proj^2 - gal^2| = {gap:.3e} "
                          f"(total {err.total:.3e})")


def check_equilibrium_fixed_point():
    scn = default_scenario(nx=16, nv=8, k_gpc=4)
    ops = build_operators(scn)
    rho = np.ones((scn.nx, 1)) @ np.array([[1.0, 0.2, 0.0, 0.0]])
    g = np.zeros((scn.nx, scn.nv, 4))
    state = StateSG(rho=rho, g=g, t=0.0, eps=scn.eps)
    new = micromacro_step(state, ops.sg_op, ops.xgrid, 1e-3)
    drift = max(float(np.max(np.abs(new.rho - rho))), float(np.max(np.abs(new.g))))
    return drift <= 1e-14, f"fixed-point drift {drift:.3e}"


def check_relaxation_closed_form():
    scn = default_scenario(kernel=constant_kernel(1.0), nx=8, nv=8, k_gpc=2, eps=0.5)
    ops = build_operators(scn)
    state = initial_state(scn, ops)
    state.rho[:] = 1.0
    state.g[:] = 0.0
    state.g[:, :, 0] = ops.vgrid.nodes[None, :]
    dt = 0.01
    n = 20
    cur = state
    for _ in range(n):
        cur = micromacro_step(cur, ops.sg_op, ops.xgrid, dt)
    factor = (1.0 + dt / scn.eps**2)**(-n)
    err = float(np.max(np.abs(cur.g - state.g * factor)))
    return err <= 1e-12, f"closed-form relaxation error {err:.3e}"


def check_kernel_validation(kernels=None):
    kernels = kernels or default_test_kernels()
    grid = build_velocity_grid(16)
    basis = build_basis("legendre", 6)
    bad = [spec.label() for spec in kernels
           if not validate_kernel(spec, grid, basis).passed]
    return not bad, ("all kernels pass" if not bad else f"failed: {bad}")


def check_diffusion_matrices(kernels=None):
    kernels = kernels or default_test_kernels()
    grid = build_velocity_grid(16)
    basis = build_basis("legendre", 6)
    ok = True
    notes = []
    for spec in kernels:
        d_freq = assemble_frequency_D(spec, grid, basis)
        op = collision_tensor_sg(spec, grid, basis)
        d_exact = assemble_exact_D(op, grid, basis)
        for name, d in (("frequency", d_freq), ("exact", d_exact)):
            sym = float(np.max(np.abs(d - d.T)))
            lo = float(np.min(np.linalg.eigvalsh(0.5 * (d + d.T))))
            if sym > 1e-12 or lo < 1.0 / spec.sigma_max - 1e-10:
                ok = False
                notes.append(f"{spec.family}/{name}: sym {sym:.1e}, min eig {lo:.4g}")
    return ok, ("matrices symmetric positive definite" if ok else "; ".join(notes))


ALL_CHECKS = (
    ("quadrature exactness", check_quadrature_exactness),
    ("basis orthonormality", check_orthonormality),
    ("velocity moment exactness", check_velocity_moments),
    ("projection idempotency", check_projection_idempotent),
    ("multiplication operator structure", check_multiply_by_z_structure),
    ("collocation coercivity identity", check_coercivity_colloc),
    ("Galerkin coercivity", check_coercivity_sg),
    ("collision null space", check_sg_null_space),
    ("collision mass conservation", check_mass_conservation_operator),
    ("equilibrium projection", check_pi_projection),
    ("error split orthogonality", check_pythagoras_split),
    ("equilibrium fixed point", check_equilibrium_fixed_point),
    ("relaxation closed form", check_relaxation_closed_form),
    ("kernel validation", check_kernel_validation),
    ("diffusion matrix structure", check_diffusion_matrices),
)

_KERNEL_AWARE = {"collocation coercivity identity", "Galerkin coercivity",
                 "collision null space", "collision mass conservation",
                 "kernel validation", "diffusion matrix structure"}


def run_selftest(kernels=None, stream=None):
    """Run every check; returns list of (name, passed, detail)."""
    results = []
    for name, fn in ALL_CHECKS:
        passed, detail = fn(kernels) if name in _KERNEL_AWARE else fn()
        results.append((name, passed, detail))
        if stream is not None:
            status = "PASS" if passed else "FAIL"
            print(f"{status}  {name}: {detail}", file=stream)
    return results
