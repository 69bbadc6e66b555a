"""Piecewise-linear finite element assembly on triangulations.

All element integrals are vectorized over triangles. Coefficient integrals use
a 7-point degree-5 rule; the constant-coefficient mass, stiffness and transport
matrices are integrated exactly.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

SQRT15 = np.sqrt(15.0)
_A1 = (6.0 - SQRT15) / 21.0
_B1 = (9.0 + 2.0 * SQRT15) / 21.0
_A2 = (6.0 + SQRT15) / 21.0
_B2 = (9.0 - 2.0 * SQRT15) / 21.0
_W1 = (155.0 - SQRT15) / 1200.0
_W2 = (155.0 + SQRT15) / 1200.0

# Barycentric points and weights (summing to 1) of the degree-5 triangle rule
TRIANGLE_POINTS = np.array(
    [
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [_B1, _A1, _A1],
        [_A1, _B1, _A1],
        [_A1, _A1, _B1],
        [_B2, _A2, _A2],
        [_A2, _B2, _A2],
        [_A2, _A2, _B2],
    ]
)
TRIANGLE_WEIGHTS = np.array([9.0 / 40.0, _W1, _W1, _W1, _W2, _W2, _W2])

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


class Triangulation(Protocol):
    @property
    def vertices(self) -> NDArray[np.float64]: ...

    @property
    def triangles(self) -> NDArray[np.int64]: ...


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Per-triangle areas, basis gradients and quadrature points."""

    areas: NDArray[np.float64]
    gradients: NDArray[np.float64]
    quad_points: NDArray[np.float64]
    triangles: NDArray[np.int64]
    n_vertices: int

    @property
    def quad_x1(self) -> NDArray[np.float64]:
        return self.quad_points[..., 0]

    @property
    def quad_x2(self) -> NDArray[np.float64]:
        return self.quad_points[..., 1]

    def _scatter(self, local: NDArray[np.generic]) -> sp.csr_matrix:
        rows = np.repeat(self.triangles, 3, axis=1).ravel()
        cols = np.tile(self.triangles, (1, 3)).ravel()
        matrix = sp.coo_matrix(
            (local.ravel(), (rows, cols)), shape=(self.n_vertices, self.n_vertices)
        )
        return matrix.tocsr()

    def stiffness(self) -> sp.csr_matrix:
        local = self.areas[:, None, None] * np.einsum(
            "tad,tbd->tab", self.gradients, self.gradients
        )
        return self._scatter(local)

    def transport(self) -> sp.csr_matrix:
        """Skew matrix of the form  int(v d1(phi) - d1(v) phi)  (row = test)."""
        d1 = self.gradients[:, :, 0]
        local = (self.areas / 3.0)[:, None, None] * (d1[:, :, None] - d1[:, None, :])
        return self._scatter(local)

    def mass(self) -> sp.csr_matrix:
        local = self.areas[:, None, None] * _LOCAL_MASS[None, :, :]
        return self._scatter(local)

    def weighted_mass(self, coefficient: NDArray[np.float64]) -> sp.csr_matrix:
        """Mass matrix with a coefficient sampled at the quadrature points (t, 7)."""
        local = np.einsum(
            "t,k,tk,ka,kb->tab",
            self.areas,
            TRIANGLE_WEIGHTS,
            coefficient,
            TRIANGLE_POINTS,
            TRIANGLE_POINTS,
        )
        return self._scatter(local)

    def load(self, integrand: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Vector of  int(g phi_l)  for g sampled at the quadrature points (t, 7)."""
        local = np.einsum(
            "t,k,tk,ka->ta", self.areas, TRIANGLE_WEIGHTS, integrand, TRIANGLE_POINTS
        )
        out = np.zeros(self.n_vertices, dtype=complex)
        np.add.at(out, self.triangles.ravel(), local.ravel())
        return out


def element_geometry(mesh: Triangulation) -> ElementGeometry:
    """Compute areas, P1 gradients and physical quadrature points."""
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    # Gradients of the barycentric coordinates: rows of the inverse Jacobian
    inv = np.empty((det.size, 2, 2))
    inv[:, 0, 0] = e2[:, 1] / det
    inv[:, 0, 1] = -e2[:, 0] / det
    inv[:, 1, 0] = -e1[:, 1] / det
    inv[:, 1, 1] = e1[:, 0] / det
    gradients = np.empty((det.size, 3, 2))
    gradients[:, 1] = inv[:, 0]
    gradients[:, 2] = inv[:, 1]
    gradients[:, 0] = -gradients[:, 1] - gradients[:, 2]
    quad_points = np.einsum("ka,tad->tkd", TRIANGLE_POINTS, p)
    return ElementGeometry(
        areas=0.5 * det,
        gradients=gradients,
        quad_points=quad_points,
        triangles=mesh.triangles,
        n_vertices=int(mesh.vertices.shape[0]),
    )


def periodic_projector(n_vertices: int, dof_map: NDArray[np.int64], n_dofs: int) -> sp.csr_matrix:
    """Sparse 0/1 matrix P with P[v, dof_map[v]] = 1."""
    return sp.csr_matrix(
        (np.ones(n_vertices), (np.arange(n_vertices), dof_map)),
        shape=(n_vertices, n_dofs),
    )


@lru_cache(maxsize=16)
def vertex_mass_matrix(mesh: Triangulation) -> sp.csr_matrix:
    return element_geometry(mesh).mass()


def l2_norm(mesh: Triangulation, values: NDArray[np.generic]) -> float:
    """Discrete L2 norm of a P1 field given at the vertices."""
    v = np.asarray(values)
    mass = vertex_mass_matrix(mesh)
    return float(np.sqrt(max(np.real(np.vdot(v, mass @ v)), 0.0)))


def relative_l2_error(
    mesh: Triangulation, values: NDArray[np.generic], reference: NDArray[np.generic]
) -> float:
    """||values - reference|| / ||reference|| in the discrete L2 norm."""
    denominator = l2_norm(mesh, reference)
    numerator = l2_norm(mesh, np.asarray(values) - np.asarray(reference))
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else float("inf")
    return numerator / denominator
