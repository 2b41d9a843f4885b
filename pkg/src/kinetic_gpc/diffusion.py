"""Galerkin drift-diffusion system and its diffusion coefficient matrix.

Two constructions of the k x k diffusion matrix are provided:

* ``assemble_frequency_D``: joint (v, z) quadrature of v^2 / lambda(v, z)
  against psi_j psi_l, with lambda the collision frequency,
* ``assemble_exact_D``: the coefficient the kinetic scheme's vanishing-
  scale limit actually produces, via the inverse of the collision
  operator on the complement of its null space.

The two coincide whenever lambda has no velocity dependence; for
genuinely anisotropic kernels the gap is measured, not assumed away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collision import CollisionOperatorSG, KernelSpec, sigma_eval
from .gpc_basis import GpcBasis
from .velocity import VelocityGrid


def assemble_frequency_D(spec: KernelSpec, grid: VelocityGrid, basis: GpcBasis) -> np.ndarray:
    """D[j,l] = sum_i w_i v_i^2 int psi_j psi_l / lambda(v_i, z) pi dz."""
    v, w = grid.nodes, grid.weights
    zq, wq = basis.quad.nodes, basis.quad.weights
    sig = sigma_eval(spec, v[:, None, None], v[None, :, None], zq[None, None, :])
    lam = np.einsum("j,ijq->iq", w, sig)
    if np.any(lam <= 0):
        raise ValueError("collision frequency is not positive at a quadrature point")
    core = (w * v**2)[:, None] / lam
    return np.einsum("iq,q,qj,ql->jl", core, wq, basis.psi, basis.psi)


def assemble_frequency_D_factorized(spec: KernelSpec, grid: VelocityGrid,
                                basis: GpcBasis, rtol: float = 1e-10) -> np.ndarray:
    """Factorized form T * S, valid only for velocity-independent frequency.

    T is the second Gaussian moment (= 1) and S the Galerkin matrix of
    1/lambda(z).  Raises if lambda actually varies across velocity nodes;
    used as an independent cross-check of ``assemble_frequency_D``.
    """
    v, w = grid.nodes, grid.weights
    zq, wq = basis.quad.nodes, basis.quad.weights
    sig = sigma_eval(spec, v[:, None, None], v[None, :, None], zq[None, None, :])
    lam = np.einsum("j,ijq->iq", w, sig)
    spread = np.max(np.abs(lam - lam[0])) / np.max(np.abs(lam))
    if spread > rtol:
        raise ValueError("collision frequency depends on velocity; "
                         "factorized assembly does not apply")
    t_coeff = float(np.sum(w * v**2))
    s_mat = np.einsum("q,qj,ql->jl", wq / lam[0], basis.psi, basis.psi)
    return t_coeff * s_mat


def assemble_exact_D(op: CollisionOperatorSG, grid: VelocityGrid,
                     basis: GpcBasis) -> np.ndarray:
    """Diffusion matrix from the inverse collision operator.

    For each mode k solve Q W = v e_k on the complement of the null space
    (deflated by the weighted v-average, which is exactly the null-space
    projector), then D[k,l] = -sum_i w_i v_i W[i,l].  Symmetric positive
    definite for any validated kernel.
    """
    nv, k = grid.nv, op.k
    w, v = grid.weights, grid.nodes
    deflate = np.zeros((nv * k, nv * k))
    for kk in range(k):
        deflate[kk::k, kk::k] = np.tile(w, (nv, 1))
    rhs = np.zeros((nv * k, k))
    for kk in range(k):
        rhs[kk::k, kk] = v
    sol = np.linalg.solve(op.flat - deflate, rhs)
    sol = sol.reshape(nv, k, k)
    sol -= np.einsum("i,ilk->lk", w, sol)[None, :, :]
    return -np.einsum("i,ilk->kl", w * v, sol)


@dataclass(frozen=True, eq=False)
class DiffusionSystem:
    """Diffusion matrix tagged with how it was assembled."""

    d_matrix: np.ndarray
    variant: str    # "frequency_formula" | "exact_inverse"

    @property
    def max_eigenvalue(self) -> float:
        return float(np.max(np.linalg.eigvalsh(0.5 * (self.d_matrix + self.d_matrix.T))))


def diffusion_dt(d_matrix: np.ndarray, dx: float, cfl: float = 0.45) -> float:
    """Explicit step bound cfl * dx^2 / (2 max-eig)."""
    dmax = float(np.max(np.linalg.eigvalsh(0.5 * (d_matrix + d_matrix.T))))
    return cfl * dx * dx / (2.0 * dmax)


def drift_diffusion_solve(d_matrix: np.ndarray, dx: float, rho0: np.ndarray,
                          t_end: float, dt: float | None = None,
                          method: str = "explicit", cfl: float = 0.45) -> np.ndarray:
    """Advance d rho / dt = D d^2 rho / dx^2 on the periodic grid.

    Second-order centered in space.  ``explicit`` is forward Euler under
    the parabolic step bound; ``implicit`` is backward Euler, stable for
    any dt.  Mass per mode is conserved exactly (the discrete second
    difference telescopes).
    """
    rho = np.array(rho0, dtype=float)
    if t_end == 0.0:
        return rho
    nx = rho.shape[0]
    if dt is None:
        dt = diffusion_dt(d_matrix, dx, cfl)
    elif method == "explicit" and dt > diffusion_dt(d_matrix, dx, 1.0) * (1 + 1e-12):
        raise ValueError("explicit diffusion step exceeds the parabolic bound")
    n = max(1, int(np.ceil(t_end / dt - 1e-12)))
    dt = t_end / n
    if method == "explicit":
        for _ in range(n):
            lap = (np.roll(rho, -1, axis=0) - 2.0 * rho + np.roll(rho, 1, axis=0)) / dx**2
            rho = rho + dt * lap @ d_matrix.T
        return rho
    if method != "implicit":
        raise ValueError(f"unknown method {method!r}")
    # backward Euler: diagonalize D and solve one periodic tridiagonal-like
    # system per eigencomponent with a prefactored dense matrix
    dsym = 0.5 * (d_matrix + d_matrix.T)
    evals, evecs = np.linalg.eigh(dsym)
    lap_mat = (np.roll(np.eye(nx), -1, axis=1) - 2.0 * np.eye(nx)
               + np.roll(np.eye(nx), 1, axis=1)) / dx**2
    rho_t = rho @ evecs
    for idx, d in enumerate(evals):
        system = np.eye(nx) - dt * d * lap_mat
        inv = np.linalg.inv(system)
        col = rho_t[:, idx]
        for _ in range(n):
            col = inv @ col
        rho_t[:, idx] = col
    return rho_t @ evecs.T
