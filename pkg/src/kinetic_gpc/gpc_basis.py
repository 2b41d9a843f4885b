"""Orthonormal polynomial bases in the random variable z.

Two families are supported, each orthonormal with respect to a probability
density pi(z):

* ``legendre``: uniform density pi(z) = 1/2 on [-1, 1],
* ``hermite``:  standard normal density on the real line.

Gauss quadrature rules are built from the three-term recurrence by the
Golub-Welsch eigenvalue method.  Every z-integral in this package goes
through these rules; there is no ad-hoc quadrature anywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

FAMILIES = ("legendre", "hermite")

# degrees are zero-based: basis k has polynomial degree k


def recurrence_coefficients(family: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (a, b) of the orthonormal recurrence up to degree n.

    The orthonormal family satisfies
        z p_k(z) = a[k+1] p_{k+1}(z) + b[k] p_k(z) + a[k] p_{k-1}(z),
    with a[0] unused.  Closed forms exist for both supported families;
    both densities are even, so b = 0.
    """
    if family not in FAMILIES:
        raise ValueError(f"unsupported polynomial family: {family!r}")
    k = np.arange(n + 1, dtype=float)
    if family == "legendre":
        with np.errstate(divide="ignore", invalid="ignore"):
            a = k / np.sqrt(4.0 * k * k - 1.0)
        a[0] = 0.0
    else:
        a = np.sqrt(k)
    return a, np.zeros(n + 1)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss rule: nodes and positive weights summing to the weight mass (=1)."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True, eq=False)
class GpcBasis:
    """Orthonormal basis of degrees 0..k-1 with an attached Gauss rule.

    ``psi`` and ``dpsi`` cache basis values and first derivatives at the
    quadrature nodes, shape (len(quad), k).
    """

    family: str
    k: int
    recurrence_a: np.ndarray
    recurrence_b: np.ndarray
    quad: QuadratureRule
    psi: np.ndarray
    dpsi: np.ndarray

    @property
    def quad_order(self) -> int:
        return len(self.quad)


def gauss_rule(family: str, q: int) -> QuadratureRule:
    """Gauss rule with q nodes, exact to degree 2q-1 against pi.

    Nodes are the eigenvalues of the symmetric tridiagonal recurrence
    operator; weights come from the squared first eigenvector components
    (total mass 1 for probability densities).
    """
    if q < 1:
        raise ValueError("quadrature order must be >= 1")
    a, b = recurrence_coefficients(family, q)
    if q == 1:
        return QuadratureRule(nodes=np.array([b[0]]), weights=np.array([1.0]))
    nodes, vecs = eigh_tridiagonal(b[:q], a[1:q])
    weights = vecs[0, :] ** 2
    return QuadratureRule(nodes=nodes, weights=weights)


def eval_basis(family: str, k: int, z) -> np.ndarray:
    """Evaluate the orthonormal functions of degree 0..k-1 at points z."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    a, b = recurrence_coefficients(family, k)
    psi = np.zeros(z.shape + (k,))
    psi[..., 0] = 1.0
    if k > 1:
        psi[..., 1] = (z - b[0]) / a[1]
    for n in range(1, k - 1):
        psi[..., n + 1] = ((z - b[n]) * psi[..., n] - a[n] * psi[..., n - 1]) / a[n + 1]
    return psi


def eval_basis_derivative(family: str, k: int, z) -> np.ndarray:
    """First z-derivatives of the orthonormal functions at points z."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    a, b = recurrence_coefficients(family, k)
    psi = eval_basis(family, k, z)
    dpsi = np.zeros_like(psi)
    if k > 1:
        dpsi[..., 1] = 1.0 / a[1]
    for n in range(1, k - 1):
        dpsi[..., n + 1] = ((z - b[n]) * dpsi[..., n] + psi[..., n]
                            - a[n] * dpsi[..., n - 1]) / a[n + 1]
    return dpsi


def build_basis(family: str, k: int, quad_order: int | None = None) -> GpcBasis:
    """Construct a basis of k functions with a Gauss rule of order >= k.

    Default quadrature order is max(2k, 20), which keeps aliasing error in
    Galerkin assemblies below the test tolerances for all kernels used.
    """
    if k < 1:
        raise ValueError("basis size k must be >= 1")
    if quad_order is None:
        quad_order = max(2 * k, 20)
    if quad_order < k:
        raise ValueError(f"quad_order {quad_order} < basis size {k}")
    a, b = recurrence_coefficients(family, max(k, quad_order))
    quad = gauss_rule(family, quad_order)
    psi = eval_basis(family, k, quad.nodes)
    dpsi = eval_basis_derivative(family, k, quad.nodes)
    return GpcBasis(family=family, k=k, recurrence_a=a, recurrence_b=b,
                    quad=quad, psi=psi, dpsi=dpsi)


def project(f, basis: GpcBasis) -> np.ndarray:
    """Coefficients <f, psi_j> of f against the basis, via the attached rule.

    ``f`` may be a callable of z or an array of values at the quadrature
    nodes.  Exact for polynomial f of degree <= 2Q-1-(k-1).
    """
    vals = f(basis.quad.nodes) if callable(f) else np.asarray(f, dtype=float)
    if vals.shape != basis.quad.nodes.shape:
        raise ValueError("values must be given at all quadrature nodes")
    return np.einsum("q,qj->j", basis.quad.weights * vals, basis.psi)


def reconstruct(coeffs: np.ndarray, basis: GpcBasis, z) -> np.ndarray:
    """Evaluate sum_j coeffs[j] psi_j at points z."""
    coeffs = np.asarray(coeffs, dtype=float)
    return eval_basis(basis.family, basis.k, z) @ coeffs


def gram_matrix(basis: GpcBasis) -> np.ndarray:
    """Gram matrix of the basis under the attached rule; identity when exact."""
    return np.einsum("q,qj,ql->jl", basis.quad.weights, basis.psi, basis.psi)


def multiply_by_z(basis: GpcBasis) -> np.ndarray:
    """Galerkin matrix of multiplication by z: M[j,l] = int z psi_j psi_l pi dz.

    Symmetric and tridiagonal (exactly, by the three-term recurrence).
    """
    w = basis.quad.weights * basis.quad.nodes
    return np.einsum("q,qj,ql->jl", w, basis.psi, basis.psi)


def z_derivative_matrix(basis: GpcBasis) -> np.ndarray:
    """Matrix sending coefficients of p(z) to coefficients of p'(z).

    Entry (j, l) is <psi_j, psi_l'>; nonzero only for j < l since
    differentiation lowers the degree.  Exact for degrees < k.
    """
    return np.einsum("q,qj,ql->jl", basis.quad.weights, basis.psi, basis.dpsi)
