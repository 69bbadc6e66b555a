"""Quasi-periodic cell problems.

For a spectral parameter z the field w(z, .) = z^{x1} v_z solves the cell
equation with f, where v_z is periodic in x1. The periodic part satisfies

    int grad v . grad phi + log z (v d1 phi - d1 v phi) - (k^2 q + log^2 z) v phi
        = -int z^{-x1} f phi

for every periodic P1 test function phi. The form is assembled once per
problem from four z-independent matrices, so a new z only costs a sparse
linear combination and a factorization.
"""

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import NDArray

from shared import get_logger

from .assembly import ElementGeometry, element_geometry, periodic_projector
from .errors import InvalidParameterError, NearPoleError, NumericalFailureError
from .medium import MediumSpec, SourceSpec
from .mesh import UnitCellMesh

logger = get_logger("cell_solver")

DEFAULT_POLE_THRESHOLD = 1e-8
RESIDUAL_TOL = 1e-10
DENSE_INDICATOR_LIMIT = 600
MAX_REFINEMENT_STEPS = 2


def principal_log(z: complex) -> complex:
    """log z with arg z in (-pi, pi]."""
    z = complex(z)
    if z == 0:
        raise InvalidParameterError("spectral parameter z must be nonzero")
    value = cmath.log(z)
    if value.imag <= -math.pi:
        value = complex(value.real, math.pi)
    return value


@dataclass(frozen=True, eq=False)
class CellOperators:
    """z-independent matrices reduced to periodic dofs (P^T A P)."""

    stiffness: sp.csr_matrix
    transport: sp.csr_matrix
    mass: sp.csr_matrix
    weighted_mass: sp.csr_matrix
    projector: sp.csr_matrix

    def system(self, log_z: complex, k2: float, absorption: float = 0.0) -> sp.csc_matrix:
        matrix = (
            self.stiffness
            + log_z * self.transport
            - log_z**2 * self.mass
            - (k2 + 1j * absorption) * self.weighted_mass
        )
        return sp.csc_matrix(matrix, dtype=complex)

    def pencil(self, alpha: float) -> sp.csr_matrix:
        """A(alpha) = K + i alpha C + alpha^2 M, Hermitian for real alpha."""
        return sp.csr_matrix(
            self.stiffness + 1j * alpha * self.transport + alpha**2 * self.mass,
            dtype=complex,
        )

    def pencil_derivative(self, alpha: float) -> sp.csr_matrix:
        return sp.csr_matrix(1j * self.transport + 2.0 * alpha * self.mass, dtype=complex)


@dataclass(frozen=True, eq=False)
class CellProblem:
    """Medium, wavenumber and absorption on a unit-cell mesh."""

    mesh: UnitCellMesh
    medium: MediumSpec
    k2: float
    absorption: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.k2) or self.k2 < 0.0:
            raise InvalidParameterError(f"k2 must be finite and >= 0, got {self.k2}")
        if not math.isfinite(self.absorption) or self.absorption < 0.0:
            raise InvalidParameterError(
                f"absorption must be finite and >= 0, got {self.absorption}"
            )

    @cached_property
    def geometry(self) -> ElementGeometry:
        return element_geometry(self.mesh)

    @cached_property
    def q_at_quadrature(self) -> NDArray[np.float64]:
        return self.medium.evaluate(self.geometry.quad_x1, self.geometry.quad_x2)

    @cached_property
    def operators(self) -> CellOperators:
        geometry = self.geometry
        mesh = self.mesh
        P = periodic_projector(mesh.n_vertices, mesh.dof_map, mesh.n_dofs)
        PT = P.T.tocsr()

        def reduce(matrix: sp.csr_matrix) -> sp.csr_matrix:
            return (PT @ matrix @ P).tocsr()

        return CellOperators(
            stiffness=reduce(geometry.stiffness()),
            transport=reduce(geometry.transport()),
            mass=reduce(geometry.mass()),
            weighted_mass=reduce(geometry.weighted_mass(self.q_at_quadrature)),
            projector=P,
        )

    def with_k2(self, k2: float, absorption: float | None = None) -> "CellProblem":
        """Same mesh and medium, sharing the assembled operators."""
        problem = CellProblem(
            mesh=self.mesh,
            medium=self.medium,
            k2=k2,
            absorption=self.absorption if absorption is None else absorption,
        )
        # Operators do not depend on k2 or absorption
        for name in ("geometry", "q_at_quadrature", "operators"):
            if name in self.__dict__:
                problem.__dict__[name] = self.__dict__[name]
        return problem


@dataclass(frozen=True, eq=False)
class CellLoad:
    """A source sampled at the quadrature points of a problem's mesh."""

    problem: CellProblem
    values: NDArray[np.complex128]
    is_zero: bool

    def vector(self, log_z: complex) -> NDArray[np.complex128]:
        """-P^T int z^{-x1} f phi for the given branch of log z."""
        n_dofs = self.problem.mesh.n_dofs
        if self.is_zero:
            return np.zeros(n_dofs, dtype=complex)
        geometry = self.problem.geometry
        integrand = np.exp(-log_z * geometry.quad_x1) * self.values
        load = geometry.load(integrand)
        return -(self.problem.operators.projector.T @ load)


def prepare_load(problem: CellProblem, source: SourceSpec | None) -> CellLoad:
    geometry = problem.geometry
    if source is None or source.is_zero:
        return CellLoad(problem=problem, values=np.zeros(geometry.quad_x1.shape, dtype=complex), is_zero=True)
    values = source.evaluate(geometry.quad_x1, geometry.quad_x2)
    return CellLoad(problem=problem, values=values, is_zero=not np.any(values))


@dataclass(frozen=True, eq=False)
class CellSolution:
    """Periodic part v_z of the cell field for one spectral parameter."""

    z: complex
    log_z: complex
    coefficients: NDArray[np.complex128]
    problem: CellProblem
    residual: float

    def nodal_values(self) -> NDArray[np.complex128]:
        """v_z at every mesh vertex (paired vertices share a value)."""
        return self.coefficients[self.problem.mesh.dof_map]

    def w_values(self) -> NDArray[np.complex128]:
        """w(z, x) = z^{x1} v_z(x) at every mesh vertex."""
        x1 = self.problem.mesh.vertices[:, 0]
        return np.exp(self.log_z * x1) * self.nodal_values()


def _resolve_log(z: complex, log_z: complex | None) -> tuple[complex, complex]:
    z = complex(z)
    if z == 0:
        raise InvalidParameterError("spectral parameter z must be nonzero")
    if log_z is None:
        return z, principal_log(z)
    log_z = complex(log_z)
    if abs(cmath.exp(log_z) - z) > 1e-10 * max(1.0, abs(z)):
        raise InvalidParameterError(f"log_z={log_z} is not a logarithm of z={z}")
    return z, log_z


def assemble_cell_system(
    problem: CellProblem,
    z: complex,
    source: SourceSpec | None = None,
    log_z: complex | None = None,
) -> tuple[sp.csc_matrix, NDArray[np.complex128]]:
    """
    Assemble the periodic system for v_z.

    Args:
        problem: Cell problem
        z: Nonzero spectral parameter
        source: Source term; None means f = 0
        log_z: Branch of log z to use; defaults to the principal branch

    Returns:
        Sparse system matrix and right-hand side over periodic dofs
    """
    z, log_z = _resolve_log(z, log_z)
    matrix = problem.operators.system(log_z, problem.k2, problem.absorption)
    rhs = prepare_load(problem, source).vector(log_z)
    return matrix, rhs


class CellFactorization:
    """Sparse LU of the cell matrix at one z, reusable for many sources."""

    def __init__(self, problem: CellProblem, z: complex, log_z: complex | None = None):
        self.problem = problem
        self.z, self.log_z = _resolve_log(z, log_z)
        self.matrix = problem.operators.system(self.log_z, problem.k2, problem.absorption)
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as exc:
            raise NearPoleError(self.z, 0.0, f"cell matrix exactly singular at z={self.z:.12g}") from exc

    def solve(self, load: CellLoad) -> CellSolution:
        rhs = load.vector(self.log_z)
        rhs_norm = float(np.linalg.norm(rhs))
        if rhs_norm == 0.0:
            return CellSolution(self.z, self.log_z, np.zeros_like(rhs), self.problem, 0.0)

        x = self._lu.solve(rhs)
        residual = float(np.linalg.norm(rhs - self.matrix @ x)) / rhs_norm
        for _ in range(MAX_REFINEMENT_STEPS):
            if residual <= 0.01 * RESIDUAL_TOL:
                break
            x = x + self._lu.solve(rhs - self.matrix @ x)
            residual = float(np.linalg.norm(rhs - self.matrix @ x)) / rhs_norm

        if not np.all(np.isfinite(x)):
            raise NearPoleError(self.z, 0.0, f"non-finite cell solution at z={self.z:.12g}")
        if residual > RESIDUAL_TOL:
            raise NumericalFailureError(
                f"cell solve residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e} at z={self.z:.12g}",
                {"z": self.z, "residual": residual},
            )
        return CellSolution(self.z, self.log_z, x, self.problem, residual)


def singularity_indicator(
    problem: CellProblem, z: complex, log_z: complex | None = None
) -> float:
    """
    Inverse-conditioning proxy sigma_min(A) / ||A||_1 of the cell matrix.

    Small values mean z is close to a Floquet multiplier; 0 is returned when
    the matrix is exactly singular.
    """
    z, log_z = _resolve_log(z, log_z)
    matrix = problem.operators.system(log_z, problem.k2, problem.absorption)
    norm = float(spla.norm(matrix, 1))
    if norm == 0.0:
        return 0.0
    n = matrix.shape[0]
    if n <= DENSE_INDICATOR_LIMIT:
        sigma_min = float(la.svdvals(matrix.toarray()).min())
        return sigma_min / norm

    try:
        lu = spla.splu(matrix)
    except RuntimeError:
        return 0.0

    def apply(x: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return lu.solve(lu.solve(np.asarray(x, dtype=complex).ravel(), trans="H"))

    operator = spla.LinearOperator((n, n), matvec=apply, dtype=np.complex128)
    try:
        largest = spla.eigsh(
            operator, k=1, which="LM", v0=np.ones(n, dtype=complex), tol=1e-8,
            return_eigenvectors=False,
        )
    except spla.ArpackNoConvergence as exc:
        raise NumericalFailureError(
            f"indicator eigensolve did not converge at z={z:.12g}", {"z": z}
        ) from exc
    lam = float(np.max(np.abs(largest)))
    if not math.isfinite(lam) or lam == 0.0:
        return 0.0
    return 1.0 / math.sqrt(lam) / norm


def solve_cell(
    problem: CellProblem,
    z: complex,
    source: SourceSpec | None = None,
    log_z: complex | None = None,
    check_pole: bool = False,
    pole_threshold: float = DEFAULT_POLE_THRESHOLD,
) -> CellSolution:
    """
    Solve the cell problem at z.

    Raises:
        InvalidParameterError: If z = 0
        NearPoleError: If the matrix is singular, or ``check_pole`` is set and
            the singularity indicator falls below ``pole_threshold``
        NumericalFailureError: If the residual check fails
    """
    if check_pole:
        indicator = singularity_indicator(problem, z, log_z)
        if indicator < pole_threshold:
            raise NearPoleError(z, indicator)
    factorization = CellFactorization(problem, z, log_z)
    solution = factorization.solve(prepare_load(problem, source))
    logger.debug("cell solve z=%s residual=%.2e", solution.z, solution.residual)
    return solution
