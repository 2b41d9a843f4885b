"""Velocity discretization by Gauss-Hermite quadrature against the Maxwellian.

All velocity-dependent fields are stored in h-representation, h = f/M,
sampled at the nodes.  Integrals against the Maxwellian become plain
weighted sums: int f dv = sum_i w_i h_i, and the Maxwellian-weighted L2
norm is ||f||^2 = sum_i w_i h_i^2.  The Maxwellian itself is never
evaluated, so large nodes cause no underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gpc_basis import gauss_rule


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    """Gauss-Hermite nodes/weights for the unit Gaussian; weights sum to 1."""

    nv: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def vmax(self) -> float:
        return float(np.max(np.abs(self.nodes)))


def build_velocity_grid(nv: int) -> VelocityGrid:
    """Gauss rule with nv nodes, exact for velocity polynomials of degree 2nv-1.

    Nodes are symmetrized so opposite pairs match bitwise, and the weight
    sum is pinned to exactly 1.0, which makes the equilibrium projection
    exactly idempotent.
    """
    if nv < 2:
        raise ValueError("velocity grid needs nv >= 2")
    rule = gauss_rule("hermite", nv)
    nodes = 0.5 * (rule.nodes - rule.nodes[::-1])
    weights = 0.5 * (rule.weights + rule.weights[::-1])
    weights = weights / weights.sum()
    weights[np.argmax(weights)] += 1.0 - weights.sum()
    return VelocityGrid(nv=nv, nodes=nodes, weights=weights)


def _v_axis(h: np.ndarray, grid: VelocityGrid, v_axis: int | None) -> int:
    if v_axis is not None:
        return v_axis
    matches = [ax for ax, size in enumerate(h.shape) if size == grid.nv]
    if len(matches) != 1:
        raise ValueError(
            f"cannot infer velocity axis of shape {h.shape}; pass v_axis")
    return matches[0]


def density(h: np.ndarray, grid: VelocityGrid, v_axis: int | None = None) -> np.ndarray:
    """Zeroth moment sum_i w_i h_i along the velocity axis."""
    h = np.asarray(h, dtype=float)
    ax = _v_axis(h, grid, v_axis)
    return np.tensordot(h, grid.weights, axes=([ax], [0]))


def pi_project(h: np.ndarray, grid: VelocityGrid, v_axis: int | None = None) -> np.ndarray:
    """Local-equilibrium projection: replace h by its weighted v-average.

    Applied independently along every other axis (space, chaos modes).
    Idempotent, and orthogonal in the weighted inner product.
    """
    h = np.asarray(h, dtype=float)
    ax = _v_axis(h, grid, v_axis)
    rho = np.tensordot(h, grid.weights, axes=([ax], [0]))
    return np.broadcast_to(np.expand_dims(rho, ax), h.shape).copy()


def moment(h: np.ndarray, p: int, grid: VelocityGrid, v_axis: int | None = None) -> np.ndarray:
    """Weighted moment sum_i w_i v_i^p h_i.

    Exact whenever p plus the polynomial degree of h stays below 2nv.
    """
    h = np.asarray(h, dtype=float)
    ax = _v_axis(h, grid, v_axis)
    return np.tensordot(h, grid.weights * grid.nodes**p, axes=([ax], [0]))


def gaussian_moment(p: int) -> float:
    """Closed-form moment of the unit Gaussian: (p-1)!! for even p, else 0."""
    if p % 2 == 1:
        return 0.0
    out = 1.0
    for m in range(p - 1, 0, -2):
        out *= m
    return out
