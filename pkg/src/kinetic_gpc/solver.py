"""Time integration of the scaled transport equation on a periodic 1-D grid.

Two schemes are implemented:

* ``micromacro``: a first-order IMEX scheme on the decomposition
  f = rho*M + eps*g with the fluctuation constrained to zero v-average.
  Fluctuation transport is explicit upwind, the stiff collision term is
  implicit with one prefactored solve per step, and the density update is
  conservative flux form.  Its step size is independent of eps and as the
  scale vanishes it becomes exactly the explicit centered scheme for the
  limiting diffusion system with the inverse-collision coefficient.
* ``resolved``: an explicit midpoint (RK2) collocation integrator with
  first-order upwind transport, usable as a reference at moderate eps.

The density modes live at cell centers and the fluctuation modes at cell
interfaces; this staggering makes the two stiff coupling terms discrete
adjoints of each other, so the pair energy is non-increasing and mass per
mode telescopes exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import metrics
from .collision import (CollisionOperatorSG, KernelSpec, collision_tensor_sg,
                        fixed_z_operator, validate_kernel)
from .diffusion import assemble_exact_D
from .gpc_basis import GpcBasis, build_basis, project, z_derivative_matrix
from .stability import verified_dt
from .velocity import VelocityGrid, build_velocity_grid


class CFLError(RuntimeError):
    """Raised when an explicit step violates its stability bound."""


class NumericalError(RuntimeError):
    """Raised when a trajectory produces non-finite values."""


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform periodic grid; centers at (i+1/2)dx, interfaces at (i+1)dx."""

    nx: int
    length: float
    dx: float
    centers: np.ndarray
    interfaces: np.ndarray


def build_spatial_grid(nx: int, length: float = 2.0 * np.pi) -> SpatialGrid:
    if nx < 4 or nx % 2 != 0:
        raise ValueError("spatial grid needs nx >= 4 and even")
    dx = length / nx
    idx = np.arange(nx)
    return SpatialGrid(nx=nx, length=length, dx=dx,
                       centers=(idx + 0.5) * dx, interfaces=(idx + 1.0) * dx)


@dataclass(eq=False)
class StateSG:
    """Micro-macro state: density modes (nx, k), fluctuation modes (nx, nv, k).

    Interface i sits between centers i and i+1 (periodic wrap).  The
    fluctuation satisfies sum_i w_i g[:, i, :] = 0, re-enforced every step.
    """

    rho: np.ndarray
    g: np.ndarray
    t: float
    eps: float

    def copy(self) -> "StateSG":
        return StateSG(self.rho.copy(), self.g.copy(), self.t, self.eps)


@dataclass(eq=False)
class ResolvedState:
    """Collocation state h(x, v) at cell centers for a fixed z."""

    h: np.ndarray
    z: float
    t: float
    eps: float

    def copy(self) -> "ResolvedState":
        return ResolvedState(self.h.copy(), self.z, self.t, self.eps)


@dataclass(frozen=True)
class InitParams:
    """Initial data family: density (c0 + c1 sin) * (1 + alpha z), optional
    non-equilibrium fluctuation seed delta * v * cos."""

    c0: float = 1.0
    c1: float = 0.5
    alpha: float = 0.3
    delta: float = 0.0


@dataclass(frozen=True)
class Scenario:
    kernel: KernelSpec
    eps: float = 1.0
    nx: int = 32
    nv: int = 16
    k_gpc: int = 8
    quad_order: int | None = None
    t_end: float = 0.5
    cfl: float = 0.45
    z_family: str = "legendre"
    scheme: str = "micromacro_sg"
    diag_every: int = 1
    init: InitParams = field(default_factory=InitParams)
    z_value: float = 0.0
    length: float = 2.0 * np.pi

    def validate(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.init.c0 <= abs(self.init.c1) * (1.0 + abs(self.init.alpha)):
            raise ValueError("initial density is not positive: "
                             "need c0 > |c1| * (1 + |alpha|)")
        if self.scheme not in ("micromacro_sg", "micromacro_colloc", "resolved_colloc"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


def default_scenario(**overrides) -> Scenario:
    """Default run: affine random kernel on the uniform family."""
    from .collision import affine_z_kernel
    base = Scenario(kernel=affine_z_kernel(1.0, 0.5))
    return replace(base, **overrides) if overrides else base


@dataclass(eq=False)
class OperatorBundle:
    """Immutable per-scenario operators, shareable across runs and threads."""

    scenario: Scenario
    basis: GpcBasis
    vgrid: VelocityGrid
    xgrid: SpatialGrid
    sg_op: CollisionOperatorSG
    d_exact: np.ndarray
    dz: np.ndarray


def build_operators(scn: Scenario, check_kernel: bool = True) -> OperatorBundle:
    scn.validate()
    if check_kernel:
        basis_probe = build_basis(scn.z_family, scn.k_gpc, scn.quad_order)
        vgrid_probe = build_velocity_grid(scn.nv)
        report = validate_kernel(scn.kernel, vgrid_probe, basis_probe)
        if not report.passed:
            raise ValueError("kernel validation failed: " + "; ".join(report.messages))
    basis = build_basis(scn.z_family, scn.k_gpc, scn.quad_order)
    vgrid = build_velocity_grid(scn.nv)
    xgrid = build_spatial_grid(scn.nx, scn.length)
    sg_op = collision_tensor_sg(scn.kernel, vgrid, basis)
    d_exact = assemble_exact_D(sg_op, vgrid, basis)
    dz = z_derivative_matrix(basis)
    return OperatorBundle(scenario=scn, basis=basis, vgrid=vgrid, xgrid=xgrid,
                          sg_op=sg_op, d_exact=d_exact, dz=dz)


def initial_state(scn: Scenario, ops: OperatorBundle) -> StateSG:
    init = scn.init
    xc, xi = ops.xgrid.centers, ops.xgrid.interfaces
    wave = 2.0 * np.pi / scn.length
    shape_c = init.c0 + init.c1 * np.sin(wave * xc)
    coeff = project(lambda z: 1.0 + init.alpha * z, ops.basis)
    rho = shape_c[:, None] * coeff[None, :]
    g = np.zeros((scn.nx, scn.nv, ops.basis.k))
    if init.delta != 0.0:
        g[:, :, 0] = init.delta * np.cos(wave * xi)[:, None] * ops.vgrid.nodes[None, :]
        g -= np.einsum("i,xik->xk", ops.vgrid.weights, g)[:, None, :]
    return StateSG(rho=rho, g=g, t=0.0, eps=scn.eps)


def initial_state_colloc(scn: Scenario, ops: OperatorBundle, z: float) -> StateSG:
    init = scn.init
    xc, xi = ops.xgrid.centers, ops.xgrid.interfaces
    wave = 2.0 * np.pi / scn.length
    rho = ((init.c0 + init.c1 * np.sin(wave * xc)) * (1.0 + init.alpha * z))[:, None]
    g = np.zeros((scn.nx, scn.nv, 1))
    if init.delta != 0.0:
        g[:, :, 0] = init.delta * np.cos(wave * xi)[:, None] * ops.vgrid.nodes[None, :]
        g -= np.einsum("i,xik->xk", ops.vgrid.weights, g)[:, None, :]
    return StateSG(rho=rho, g=g, t=0.0, eps=scn.eps)


class MicroMacroStepper:
    """One-step integrator with a prefactored implicit collision solve.

    The factorization of (eps^2 I - dt Q) is built once; the per-interface
    solves run as one multi-right-hand-side backsubstitution, so a step is
    a pure function of the state regardless of any parallel schedule.
    """

    def __init__(self, op: CollisionOperatorSG, xgrid: SpatialGrid, eps: float, dt: float):
        self.op = op
        self.xgrid = xgrid
        self.eps = eps
        self.dt = dt
        nk = op.nv * op.k
        system = eps**2 * np.eye(nk) - dt * op.flat
        self._lu = lu_factor(system)
        # cannot happen for eps > 0 (the collision part is negative
        # semidefinite), so a zero pivot means corrupted operators
        if np.any(np.diag(self._lu[0]) == 0.0):
            raise NumericalError("implicit collision system is singular")
        grid = op.grid
        self._vplus = np.maximum(grid.nodes, 0.0)[None, :, None]
        self._vminus = np.minimum(grid.nodes, 0.0)[None, :, None]
        self._wv = grid.weights
        self._flux_w = grid.weights * grid.nodes

    def step(self, state: StateSG) -> StateSG:
        if state.eps != self.eps:
            raise ValueError("state eps does not match the factorized solver")
        op, dx, dt, eps = self.op, self.xgrid.dx, self.dt, self.eps
        rho, g = state.rho, state.g
        nx = rho.shape[0]

        # explicit upwind transport of the fluctuation, projected off equilibrium
        dgm = (g - np.roll(g, 1, axis=0)) / dx
        dgp = (np.roll(g, -1, axis=0) - g) / dx
        phi = self._vplus * dgm + self._vminus * dgp
        phi -= np.einsum("i,xik->xk", self._wv, phi)[:, None, :]

        # implicit collision solve against the stiff density coupling
        drho = (np.roll(rho, -1, axis=0) - rho) / dx
        rhs = eps**2 * g - dt * (op.grid.nodes[None, :, None] * drho[:, None, :]
                                 + eps * phi)
        gstar = lu_solve(self._lu, rhs.reshape(nx, op.nv * op.k).T).T
        gstar = gstar.reshape(nx, op.nv, op.k)

        # re-enforce the zero-average constraint, then conservative density update
        gnew = gstar - np.einsum("i,xik->xk", self._wv, gstar)[:, None, :]
        flux = np.einsum("i,xik->xk", self._flux_w, gnew)
        rhonew = rho - dt / dx * (flux - np.roll(flux, 1, axis=0))
        return StateSG(rho=rhonew, g=gnew, t=state.t + dt, eps=eps)


def micromacro_step(state: StateSG, op: CollisionOperatorSG, xgrid: SpatialGrid,
                    dt: float) -> StateSG:
    """Single micro-macro step; factorizes the implicit system on the fly."""
    return MicroMacroStepper(op, xgrid, state.eps, dt).step(state)


def micromacro_dt(ops: OperatorBundle, eps: float, op: CollisionOperatorSG | None = None,
                  d_max: float | None = None) -> float:
    """Spectrally verified step size for the micro-macro scheme."""
    if op is None:
        op = ops.sg_op
    if d_max is None:
        d_max = float(np.max(np.linalg.eigvalsh(0.5 * (ops.d_exact + ops.d_exact.T))))
    return verified_dt(op, eps, ops.xgrid.dx, ops.xgrid.nx, d_max,
                       cfl=ops.scenario.cfl)


def resolved_dt(spec: KernelSpec, xgrid: SpatialGrid, vgrid: VelocityGrid,
                eps: float) -> float:
    """Explicit collocation bound 0.5 min(eps dx / vmax, eps^2 / (2 sigma_max))."""
    return 0.5 * min(eps * xgrid.dx / vgrid.vmax, eps**2 / (2.0 * spec.sigma_max))


def resolved_step_colloc(state: ResolvedState, op, vgrid: VelocityGrid,
                         xgrid: SpatialGrid, dt: float,
                         sigma_max: float | None = None) -> ResolvedState:
    """One explicit RK2 step of the collocation equations at a fixed z.

    First-order upwind transport at cell centers plus the collision matrix;
    refuses steps beyond the explicit stability bound.
    """
    eps, dx = state.eps, xgrid.dx
    smax = sigma_max if sigma_max is not None else -np.min(np.diag(op.matrix))
    bound = 0.5 * min(eps * dx / vgrid.vmax, eps**2 / (2.0 * smax))
    if dt > bound * (1.0 + 1e-12):
        raise CFLError(f"resolved step {dt:g} exceeds stability bound {bound:g}")
    vp = np.maximum(vgrid.nodes, 0.0)[None, :]
    vm = np.minimum(vgrid.nodes, 0.0)[None, :]

    def rate(h):
        dhm = (h - np.roll(h, 1, axis=0)) / dx
        dhp = (np.roll(h, -1, axis=0) - h) / dx
        return -(vp * dhm + vm * dhp) / eps + (h @ op.matrix.T) / eps**2

    h = state.h
    k1 = rate(h)
    k2 = rate(h + dt * k1)
    return ResolvedState(h=h + 0.5 * dt * (k1 + k2), z=state.z,
                         t=state.t + dt, eps=eps)


@dataclass(eq=False)
class RunResult:
    state: object
    diagnostics: list
    dt: float
    n_steps: int
    runtime_ms: float
    meta: dict


DIAG_COLUMNS = ("t", "mass_mode0", "gamma_norm", "defect_norm", "dk1_norm", "dk2_norm")


def _diag_row(state: StateSG, ops: OperatorBundle, track_transport: bool) -> dict:
    dx, vgrid = ops.xgrid.dx, ops.vgrid
    row = {
        "t": state.t,
        "mass_mode0": dx * float(np.sum(state.rho[:, 0])),
        "gamma_norm": metrics.gamma_norm_state(state, dx, vgrid),
        "defect_norm": metrics.state_defect_norm(state, dx, vgrid),
    }
    k = state.rho.shape[1]
    dz = ops.dz if k == ops.basis.k else np.zeros((k, k))
    row["dk1_norm"] = metrics.state_dk_norm(state, dz, 1, dx, vgrid)
    row["dk2_norm"] = metrics.state_dk_norm(state, dz, 2, dx, vgrid)
    if track_transport:
        for j in range(3):
            row[f"vdx_dk{j}_norm"] = metrics.state_transport_norm(state, dz, j, dx, vgrid)
    if not np.isfinite(row["gamma_norm"]):
        raise NumericalError(f"non-finite state at t = {state.t:g}")
    return row


def run_scenario(scn: Scenario, ops: OperatorBundle | None = None,
                 scheme: str | None = None, dt: float | None = None,
                 t_end: float | None = None, z_value: float | None = None,
                 diag_every: int | None = None, track_transport: bool = False,
                 allow_expensive: bool = False) -> RunResult:
    """Integrate a scenario to t_end and collect diagnostics.

    The step size defaults to the scheme's verified stability rule and is
    then rounded down so t_end is hit exactly.  Diagnostics are sampled at
    the configured cadence plus the initial and final states; diag_every=0
    keeps endpoints only.
    """
    scheme = scheme or scn.scheme
    t_end = scn.t_end if t_end is None else t_end
    z_value = scn.z_value if z_value is None else z_value
    diag_every = scn.diag_every if diag_every is None else diag_every
    if ops is None:
        ops = build_operators(scn)
    tic = time.perf_counter()

    if scheme == "resolved_colloc":
        if scn.eps < 1e-2 and not allow_expensive:
            raise ValueError("resolved collocation below eps = 1e-2 is "
                             "guarded as too expensive; pass allow_expensive")
        return _run_resolved(scn, ops, z_value, dt, t_end, diag_every, tic)

    if scheme == "micromacro_sg":
        op = ops.sg_op
        state = initial_state(scn, ops)
    elif scheme == "micromacro_colloc":
        op = fixed_z_operator(scn.kernel, ops.vgrid, z_value)
        state = initial_state_colloc(scn, ops, z_value)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    if dt is None:
        dt = micromacro_dt(ops, scn.eps, op=op)
    n = 0 if t_end == 0.0 else max(1, int(np.ceil(t_end / dt - 1e-12)))
    if n > 0:
        dt = t_end / n
    diags = [_diag_row(state, ops, track_transport)]
    stepper = MicroMacroStepper(op, ops.xgrid, scn.eps, dt) if n > 0 else None
    for step in range(n):
        state = stepper.step(state)
        if (diag_every and (step + 1) % diag_every == 0) or step == n - 1:
            try:
                diags.append(_diag_row(state, ops, track_transport))
            except NumericalError as exc:
                raise NumericalError(f"{exc} (step {step + 1})") from None
    runtime_ms = 1000.0 * (time.perf_counter() - tic)
    meta = {"scheme": scheme, "scheme_family": "micromacro", "nx": scn.nx,
            "nv": scn.nv, "k": state.rho.shape[1], "eps": scn.eps, "dt": dt,
            "t_end": t_end, "kernel": scn.kernel.label()}
    if scheme == "micromacro_colloc":
        meta["z_value"] = z_value
    return RunResult(state=state, diagnostics=diags, dt=dt, n_steps=n,
                     runtime_ms=runtime_ms, meta=meta)


def _run_resolved(scn, ops, z_value, dt, t_end, diag_every, tic):
    from .collision import collision_matrix_colloc
    op = collision_matrix_colloc(scn.kernel, ops.vgrid, z_value)
    init = scn.init
    wave = 2.0 * np.pi / scn.length
    xc = ops.xgrid.centers
    h = ((init.c0 + init.c1 * np.sin(wave * xc)) * (1.0 + init.alpha * z_value))[:, None] \
        * np.ones((1, scn.nv))
    if init.delta != 0.0:
        h = h + scn.eps * init.delta * np.cos(wave * xc)[:, None] * ops.vgrid.nodes[None, :]
    state = ResolvedState(h=h, z=z_value, t=0.0, eps=scn.eps)
    if dt is None:
        dt = resolved_dt(scn.kernel, ops.xgrid, ops.vgrid, scn.eps)
    n = 0 if t_end == 0.0 else max(1, int(np.ceil(t_end / dt - 1e-12)))
    if n > 0:
        dt = t_end / n
    dx, wv = ops.xgrid.dx, ops.vgrid.weights

    def diag(state):
        rho = state.h @ wv
        avg = rho[:, None]
        defect = np.sqrt(dx * np.einsum("i,xi->", wv, (state.h - avg)**2))
        gnorm = np.sqrt(dx * np.einsum("i,xi->", wv, state.h**2))
        if not np.isfinite(gnorm):
            raise NumericalError(f"non-finite state at t = {state.t:g}")
        return {"t": state.t, "mass_mode0": dx * float(np.sum(rho)),
                "gamma_norm": float(gnorm), "defect_norm": float(defect),
                "dk1_norm": 0.0, "dk2_norm": 0.0}

    diags = [diag(state)]
    for step in range(n):
        state = resolved_step_colloc(state, op, ops.vgrid, ops.xgrid, dt,
                                     sigma_max=scn.kernel.sigma_max)
        if (diag_every and (step + 1) % diag_every == 0) or step == n - 1:
            diags.append(diag(state))
    runtime_ms = 1000.0 * (time.perf_counter() - tic)
    meta = {"scheme": "resolved_colloc", "scheme_family": "resolved",
            "nx": scn.nx, "nv": scn.nv, "k": 1, "eps": scn.eps, "dt": dt,
            "t_end": t_end, "kernel": scn.kernel.label(), "z_value": z_value}
    return RunResult(state=state, diagnostics=diags, dt=dt, n_steps=n,
                     runtime_ms=runtime_ms, meta=meta)


def build_ensemble(scn: Scenario, ops: OperatorBundle, rule, dt: float,
                   t_end: float, map_fn=map) -> "metrics.CollocationEnsemble":
    """Collocation ensemble at the reference rule nodes with a shared step size."""
    if t_end > 0.0:
        dt = t_end / max(1, int(np.ceil(t_end / dt - 1e-12)))
    nq = len(rule)
    rho = np.zeros((nq, scn.nx))
    g = np.zeros((nq, scn.nx, scn.nv))

    def solve(idx_z):
        idx, z = idx_z
        res = run_scenario(scn, ops=ops, scheme="micromacro_colloc", dt=dt,
                           t_end=t_end, z_value=float(z), diag_every=0)
        return idx, res.state

    for idx, state in map_fn(solve, list(enumerate(rule.nodes))):
        rho[idx] = state.rho[:, 0]
        g[idx] = state.g[:, :, 0]
    meta = {"nx": scn.nx, "nv": scn.nv, "dt": dt, "t_end": t_end,
            "eps": scn.eps, "scheme_family": "micromacro",
            "kernel": scn.kernel.label()}
    return metrics.CollocationEnsemble(rule=rule, family=scn.z_family,
                                       rho=rho, g=g, eps=scn.eps, meta=meta)
