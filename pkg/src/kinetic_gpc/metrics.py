"""Energy norms, the local-equilibrium defect, and the spectral error split.

The energy norm combines x (cell sum), v (Maxwellian-weighted sum in
h-representation), and z (chaos-mode sum, or reference-rule sum for
collocation ensembles).  Errors of a chaos-Galerkin solution against a
collocation ensemble split orthogonally into a projection part (truncating
the exact solution) and a Galerkin part (mode-coefficient error).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gpc_basis import GpcBasis, QuadratureRule, eval_basis
from .velocity import VelocityGrid


# ---------------------------------------------------------------------------
# norms on chaos-mode fields

def gamma_norm(h_modes: np.ndarray, dx: float, vgrid: VelocityGrid) -> float:
    """Energy norm of a mode field with shape (nx, nv, k)."""
    return float(np.sqrt(dx * np.einsum("i,xik->", vgrid.weights, h_modes**2)))


def gamma_norm_density(rho: np.ndarray, dx: float) -> float:
    """Energy norm of density modes (nx, k); the Maxwellian factor integrates to 1."""
    return float(np.sqrt(dx * np.sum(rho**2)))


def gamma_norm_samples(samples: np.ndarray, rule: QuadratureRule, dx: float,
                       vgrid: VelocityGrid) -> float:
    """Energy norm of z-collocation samples with shape (nq, nx, nv)."""
    return float(np.sqrt(dx * np.einsum("q,i,qxi->", rule.weights,
                                        vgrid.weights, samples**2)))


def apply_z_derivative(field: np.ndarray, dmat: np.ndarray, times: int = 1) -> np.ndarray:
    """Apply the coefficient-space z-derivative along the last (mode) axis."""
    out = np.asarray(field, dtype=float)
    for _ in range(times):
        out = out @ dmat.T
    return out


def gamma_k_norm(h_modes: np.ndarray, dmat: np.ndarray, k: int, dx: float,
                 vgrid: VelocityGrid) -> float:
    """Sobolev-in-z energy norm: sum of squared norms of derivatives 0..k."""
    total = 0.0
    cur = np.asarray(h_modes, dtype=float)
    for _ in range(k + 1):
        total += dx * np.einsum("i,xik->", vgrid.weights, cur**2)
        cur = cur @ dmat.T
    return float(np.sqrt(total))


def defect_norm(h_modes: np.ndarray, dx: float, vgrid: VelocityGrid) -> float:
    """Distance from local equilibrium: norm of h minus its v-average."""
    avg = np.einsum("i,xik->xk", vgrid.weights, h_modes)
    return gamma_norm(h_modes - avg[:, None, :], dx, vgrid)


# ---------------------------------------------------------------------------
# norms on micro-macro states (density at centers, fluctuation at interfaces)

def state_interface_field(state, vgrid: VelocityGrid) -> np.ndarray:
    """Collocate the state on interfaces: averaged density plus scaled fluctuation."""
    rho_avg = 0.5 * (state.rho + np.roll(state.rho, -1, axis=0))
    return rho_avg[:, None, :] + state.eps * state.g


def gamma_norm_state(state, dx: float, vgrid: VelocityGrid) -> float:
    """Discrete energy of the micro-macro pair.

    The density part lives on centers and the fluctuation part on
    interfaces; their cross term vanishes because the fluctuation carries
    no v-average.  This is the quantity the scheme dissipates step by step.
    """
    d2 = dx * np.sum(state.rho**2)
    g2 = dx * np.einsum("i,xik->", vgrid.weights, state.g**2)
    return float(np.sqrt(d2 + state.eps**2 * g2))


def state_dk_norm(state, dmat: np.ndarray, order: int, dx: float,
                  vgrid: VelocityGrid) -> float:
    """Energy norm of the order-th z-derivative of the state."""
    rho = apply_z_derivative(state.rho, dmat, order)
    g = apply_z_derivative(state.g, dmat, order)
    d2 = dx * np.sum(rho**2)
    g2 = dx * np.einsum("i,xik->", vgrid.weights, g**2)
    return float(np.sqrt(d2 + state.eps**2 * g2))


def state_defect_norm(state, dx: float, vgrid: VelocityGrid) -> float:
    """Norm of the local-equilibrium defect of the collocated state.

    Equals eps times the fluctuation norm up to the enforced zero-average
    constraint; computed from the collocated field rather than assumed.
    """
    h = state_interface_field(state, vgrid)
    return defect_norm(h, dx, vgrid)


def state_transport_norm(state, dmat: np.ndarray, order: int, dx: float,
                         vgrid: VelocityGrid) -> float:
    """Energy norm of the order-th z-derivative of v * (centered x-difference)."""
    h = state_interface_field(state, vgrid)
    dxh = (np.roll(h, -1, axis=0) - np.roll(h, 1, axis=0)) / (2.0 * dx)
    vdx = vgrid.nodes[None, :, None] * dxh
    return gamma_norm(apply_z_derivative(vdx, dmat, order), dx, vgrid)


# ---------------------------------------------------------------------------
# collocation ensembles and the spectral error split

ENSEMBLE_MATCH_KEYS = ("nx", "nv", "dt", "t_end", "eps", "scheme_family")


@dataclass(frozen=True, eq=False)
class CollocationEnsemble:
    """Per-node solutions at the reference z-rule, with run metadata.

    ``rho`` has shape (nq, nx) and ``g`` shape (nq, nx, nv); node q holds
    the solution at z = rule.nodes[q].  The metadata records the shared
    discretization so comparisons against mismatched runs fail loudly.
    """

    rule: QuadratureRule
    family: str
    rho: np.ndarray
    g: np.ndarray
    eps: float
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SgError:
    total: float
    projection: float
    galerkin: float


def project_ensemble(ens: CollocationEnsemble, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Chaos coefficients of the ensemble for modes 0..k-1 via the reference rule."""
    psi = eval_basis(ens.family, k, ens.rule.nodes)
    w = ens.rule.weights
    rho_modes = np.einsum("q,qk,qx->xk", w, psi, ens.rho)
    g_modes = np.einsum("q,qk,qxi->xik", w, psi, ens.g)
    return rho_modes, g_modes


def sg_error(state, ens: CollocationEnsemble, dx: float, vgrid: VelocityGrid,
             run_meta: dict | None = None) -> SgError:
    """Error of a Galerkin state against the ensemble, split orthogonally.

    total^2 = projection^2 + galerkin^2 up to quadrature roundoff; the
    projection part truncates the ensemble, the Galerkin part compares
    coefficients in mode space.  Requires the ensemble's reference rule to
    hold at least 2k + 4 nodes and matching discretization metadata.
    """
    k = state.rho.shape[1]
    if len(ens.rule) < 2 * k + 4:
        raise ValueError(f"reference rule of {len(ens.rule)} nodes is too small "
                         f"for k = {k}")
    if run_meta is not None:
        for key in ENSEMBLE_MATCH_KEYS:
            if key in ens.meta and key in run_meta and ens.meta[key] != run_meta[key]:
                raise ValueError(
                    f"ensemble/run discretization mismatch on {key!r}: "
                    f"{ens.meta[key]!r} vs {run_meta[key]!r}")
    eps = state.eps
    w = ens.rule.weights
    wv = vgrid.weights
    psi = eval_basis(ens.family, k, ens.rule.nodes)

    rho_at = psi @ state.rho.T                     # (nq, nx)
    g_at = np.einsum("qk,xik->qxi", psi, state.g)
    total2 = dx * np.einsum("q,qx->", w, (ens.rho - rho_at)**2) \
        + eps**2 * dx * np.einsum("q,i,qxi->", w, wv, (ens.g - g_at)**2)

    rho_modes, g_modes = project_ensemble(ens, k)
    rho_trunc = psi @ rho_modes.T
    g_trunc = np.einsum("qk,xik->qxi", psi, g_modes)
    proj2 = dx * np.einsum("q,qx->", w, (ens.rho - rho_trunc)**2) \
        + eps**2 * dx * np.einsum("q,i,qxi->", w, wv, (ens.g - g_trunc)**2)

    gal2 = dx * np.sum((rho_modes - state.rho)**2) \
        + eps**2 * dx * np.einsum("i,xik->", wv, (g_modes - state.g)**2)
    return SgError(total=float(np.sqrt(total2)),
                   projection=float(np.sqrt(proj2)),
                   galerkin=float(np.sqrt(gal2)))


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of log10(y) against log10(x), centered form.

    The plotting side recomputes this from CSV output with the identical
    arithmetic, so the two must agree bit for bit.
    """
    lx = np.log10(np.asarray(x, dtype=float))
    ly = np.log10(np.asarray(y, dtype=float))
    dxc = lx - lx.mean()
    dyc = ly - ly.mean()
    return float(np.sum(dxc * dyc) / np.sum(dxc * dxc))
