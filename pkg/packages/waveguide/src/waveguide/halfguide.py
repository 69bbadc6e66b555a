"""Half-guide Dirichlet problems through a recovered full-guide source.

Given Dirichlet data phi on Gamma_1 = {1/2} x (0, 1), find a source f supported
in the unit cell whose full-guide solution has trace phi there; the solution
on the cells n >= 1 then solves the half-guide problem. The trace operator is
compact, so f is recovered with Tikhonov regularization on a finite source
basis, the regularization parameter picked from a sweep.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from numpy.typing import NDArray

from shared import CellRange, cutoff, get_logger

from .cell_solver import CellProblem
from .errors import InvalidParameterError, RecoveryFailureError
from .fullguide import LapSolution, SolveConfig, solve_full, solve_full_batch
from .medium import SourceSpec, combine_sources
from .mesh import UnitCellMesh

logger = get_logger("halfguide")

CUTOFF_INNER = 0.3
CUTOFF_OUTER = 0.45
MAX_MISMATCH = 0.5
TIE_TOLERANCE = 1e-3


def trace_mass_matrix(mesh: UnitCellMesh) -> NDArray[np.float64]:
    """1-D P1 mass matrix on Gamma_1 (uniform spacing 1/n)."""
    n = mesh.n
    spacing = 1.0 / n
    main = np.full(n + 1, 2.0 * spacing / 3.0)
    main[[0, -1]] = spacing / 3.0
    off = np.full(n, spacing / 6.0)
    return np.diag(main) + np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True, eq=False)
class TraceVector:
    """Complex values at the Gamma_1 nodes, ascending in x2, with an L2 weight."""

    values: NDArray[np.complex128]
    x2: NDArray[np.float64]
    weight: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.values.shape != self.x2.shape or self.weight.shape != (self.x2.size, self.x2.size):
            raise InvalidParameterError("trace values, heights and weight do not match")
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("trace values must be finite")

    def norm(self) -> float:
        return float(math.sqrt(max(np.real(np.vdot(self.values, self.weight @ self.values)), 0.0)))

    @classmethod
    def on_mesh(cls, mesh: UnitCellMesh, values: NDArray[np.generic]) -> "TraceVector":
        x2 = mesh.vertices[mesh.right_nodes, 1]
        return cls(np.asarray(values, dtype=complex), x2, trace_mass_matrix(mesh))

    @classmethod
    def from_samples(
        cls, mesh: UnitCellMesh, x2: NDArray[np.float64], values: NDArray[np.complex128]
    ) -> "TraceVector":
        """Linear interpolation of sampled data onto the Gamma_1 nodes."""
        if x2.size < 2 or np.any(np.diff(x2) <= 0.0):
            raise InvalidParameterError("trace samples need at least two strictly increasing heights")
        nodes = mesh.vertices[mesh.right_nodes, 1]
        interpolated = np.interp(nodes, x2, values.real) + 1j * np.interp(nodes, x2, values.imag)
        return cls.on_mesh(mesh, interpolated)

    @classmethod
    def from_solution(cls, solution: LapSolution, n: int = 0) -> "TraceVector":
        return cls.on_mesh(solution.mesh, solution.trace(n))


@dataclass(frozen=True)
class SourceBasis:
    """sin(p pi (x1 + 1/2)) cos(r pi x2) chi(x1) for p = 1..P1, r = 0..R1-1, row-major in (p, r)."""

    p_max: int
    r_count: int

    def __post_init__(self) -> None:
        if self.p_max < 1 or self.r_count < 1:
            raise InvalidParameterError(f"source basis needs P1 >= 1 and R1 >= 1, got {self.p_max}, {self.r_count}")

    @property
    def size(self) -> int:
        return self.p_max * self.r_count

    def modes(self) -> list[tuple[int, int]]:
        return [(p, r) for p in range(1, self.p_max + 1) for r in range(self.r_count)]

    def check_resolution(self, mesh: UnitCellMesh) -> None:
        limit = mesh.n / 4.0
        if self.p_max > limit or self.r_count - 1 > limit:
            raise InvalidParameterError(
                f"basis frequencies up to (p={self.p_max}, r={self.r_count - 1}) exceed "
                f"the resolvable limit {limit:g} for n={mesh.n}"
            )

    def sources(self) -> list[SourceSpec]:
        return [_basis_function(p, r) for p, r in self.modes()]


def _basis_function(p: int, r: int) -> SourceSpec:
    def f(x1: NDArray[np.float64], x2: NDArray[np.float64]) -> NDArray[np.complex128]:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        envelope = cutoff(np.abs(x1), CUTOFF_INNER, CUTOFF_OUTER)
        return (np.sin(p * np.pi * (x1 + 0.5)) * np.cos(r * np.pi * x2) * envelope).astype(complex)

    return SourceSpec(f=f, name=f"basis(p={p}, r={r})")


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Columns A(phi_l) as Gamma_1 traces, with the trace L2 weight."""

    matrix: NDArray[np.complex128]
    weight: NDArray[np.float64]

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.matrix.shape[0]), int(self.matrix.shape[1])


def apply_A(problem: CellProblem, f: SourceSpec, config: SolveConfig) -> TraceVector:
    """Gamma_1 trace of the full-guide solution for source f."""
    solution = solve_full(problem, f, config.model_copy(update={"cells": CellRange(n_min=0, n_max=0)}))
    return TraceVector.from_solution(solution, 0)


def _operator_from_solutions(solutions: Sequence[LapSolution]) -> OperatorMatrix:
    mesh = solutions[0].mesh
    columns = [solution.trace(0) for solution in solutions]
    return OperatorMatrix(matrix=np.stack(columns, axis=1), weight=trace_mass_matrix(mesh))


def build_operator_matrix(problem: CellProblem, basis: SourceBasis, config: SolveConfig) -> OperatorMatrix:
    """One full-guide solve per basis function, sharing factorizations."""
    basis.check_resolution(problem.mesh)
    solutions = solve_full_batch(
        problem, basis.sources(), config.model_copy(update={"cells": CellRange(n_min=0, n_max=0)})
    )
    return _operator_from_solutions(solutions)


@dataclass(frozen=True)
class TikhonovResult:
    alpha: float
    coefficients: NDArray[np.complex128]
    residual_norm: float
    solution_norm: float


class TikhonovSystem:
    """SVD of the weight-scaled operator matrix, reused across alpha values."""

    def __init__(self, operator: OperatorMatrix):
        self.operator = operator
        # W = L L^H, so ||y||_W = ||L^H y||_2
        self._factor = la.cholesky(operator.weight, lower=True)
        scaled = self._factor.conj().T @ operator.matrix
        self.u, self.sigma, self.vh = la.svd(scaled, full_matrices=False)

    def solve(self, data: TraceVector, alpha: float) -> TikhonovResult:
        if not alpha > 0.0:
            raise InvalidParameterError(f"regularization parameter must be positive, got {alpha}")
        scaled_data = self._factor.conj().T @ data.values
        projections = self.u.conj().T @ scaled_data
        filters = self.sigma / (self.sigma**2 + alpha)
        coefficients = self.vh.conj().T @ (filters * projections)
        residual = self.operator.matrix @ coefficients - data.values
        residual_norm = float(math.sqrt(max(np.real(np.vdot(residual, self.operator.weight @ residual)), 0.0)))
        return TikhonovResult(alpha, coefficients, residual_norm, float(np.linalg.norm(coefficients)))


def tikhonov_solve(operator: OperatorMatrix, data: TraceVector, alpha: float) -> TikhonovResult:
    """
    Coefficients c minimizing ||Phi c - phi||_W^2 + alpha ||c||^2.

    Raises:
        InvalidParameterError: If alpha <= 0
    """
    if not alpha > 0.0:
        raise InvalidParameterError(f"regularization parameter must be positive, got {alpha}")
    return TikhonovSystem(operator).solve(data, alpha)


@dataclass(frozen=True, eq=False)
class HalfGuideResult:
    """Half-guide solution on cells 1..n_max with the recovery diagnostics."""

    solution: LapSolution
    alpha: float
    coefficients: NDArray[np.complex128]
    source: SourceSpec
    gamma1_mismatch: float
    sweep: list[tuple[float, float, float]] = field(default_factory=list)


def _select_alpha(sweep: list[tuple[float, float, float]]) -> tuple[float, float]:
    best = min(mismatch for _, mismatch, _ in sweep)
    candidates = [alpha for alpha, mismatch, _ in sweep if mismatch <= best * (1.0 + TIE_TOLERANCE)]
    alpha = max(candidates)
    return alpha, next(m for a, m, _ in sweep if a == alpha)


def solve_half(
    problem: CellProblem,
    data: TraceVector,
    basis: SourceBasis,
    alphas: Sequence[float],
    config: SolveConfig,
) -> HalfGuideResult:
    """
    Solve the half-guide problem with Dirichlet data on Gamma_1.

    The sweep mismatch ||Phi c(alpha) - phi|| / ||phi|| equals the Gamma_1
    mismatch of the full-guide solution for f_alpha by linearity; the output
    field is the same linear combination of the basis solutions, and its trace
    mismatch is measured again on the combined field.

    Raises:
        InvalidParameterError: On an empty or non-positive sweep, or a cell range without n >= 1
        RecoveryFailureError: If every sweep value leaves a relative mismatch above 0.5
    """
    if not alphas or any(not a > 0.0 for a in alphas):
        raise InvalidParameterError("alpha sweep must be nonempty and positive")
    n_max = config.cells.n_max
    if n_max < 1:
        raise InvalidParameterError(f"half-guide output needs n_max >= 1, got {n_max}")
    if data.values.size != problem.mesh.right_nodes.size:
        raise InvalidParameterError("trace data does not match the Gamma_1 nodes of the mesh")
    basis.check_resolution(problem.mesh)

    sources = basis.sources()
    cells = list(range(0, n_max + 1))
    solutions = solve_full_batch(
        problem, sources, config.model_copy(update={"cells": CellRange(n_min=0, n_max=n_max)})
    )
    operator = _operator_from_solutions(solutions)
    system = TikhonovSystem(operator)
    data_norm = data.norm()

    sweep: list[tuple[float, float, float]] = []
    results: dict[float, TikhonovResult] = {}
    for alpha in sorted(float(a) for a in alphas):
        result = system.solve(data, alpha)
        mismatch = result.residual_norm / data_norm if data_norm > 0.0 else 0.0
        sweep.append((alpha, mismatch, result.solution_norm))
        results[alpha] = result
        logger.debug("alpha=%.3e mismatch=%.3e |c|=%.3e", alpha, mismatch, result.solution_norm)

    alpha, predicted = _select_alpha(sweep)
    if predicted > MAX_MISMATCH:
        raise RecoveryFailureError(
            f"no regularization parameter reproduces the boundary data (best mismatch {predicted:.3e})",
            [(a, m) for a, m, _ in sweep],
        )
    coefficients = results[alpha].coefficients

    fields = {n: np.zeros(problem.mesh.n_vertices, dtype=complex) for n in cells}
    for c, solution in zip(coefficients, solutions, strict=True):
        for n in cells:
            fields[n] += c * solution.cell(n)
    combined = LapSolution(fields, problem.mesh, dict(solutions[0].metadata) if solutions else {})

    trace = TraceVector.from_solution(combined, 0)
    difference = TraceVector(trace.values - data.values, trace.x2, trace.weight)
    measured = difference.norm() / data_norm if data_norm > 0.0 else difference.norm()
    logger.info(
        "Half-guide recovery: alpha=%.3e, predicted mismatch %.3e, measured %.3e",
        alpha, predicted, measured,
    )
    output = combined.restrict(list(range(1, n_max + 1)))
    output.metadata.update({"alpha_chosen": alpha, "gamma1_mismatch": measured, "M0": basis.size})
    return HalfGuideResult(
        solution=output,
        alpha=alpha,
        coefficients=coefficients,
        source=combine_sources(list(coefficients), sources),
        gamma1_mismatch=measured,
        sweep=sweep,
    )
