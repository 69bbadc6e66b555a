"""Full-guide LAP solutions by contour quadrature.

For every cell index n the solution on Omega_n, pulled back to the unit cell,
is the contour integral

    u(x1 + n, x2) = 1/(2 pi i) oint w(z, x) z^{n-1} dz,

evaluated segment by segment with the graded trapezoid rule. One cell solve
per quadrature node serves all cells n, since n enters only through z^n.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import ConfigDict, Field, model_validator

from shared import BaseConfigModel, CellRange, get_logger
from shared.types import EvenNodeCount, GradingOrder

from .assembly import l2_norm, relative_l2_error
from .cell_solver import (
    DEFAULT_POLE_THRESHOLD,
    CellFactorization,
    CellLoad,
    CellProblem,
    prepare_load,
    singularity_indicator,
)
from .contour import Arc, Contour, DeltaPolicy, build_contour
from .dispersion import compute_diagram, find_crossings
from .errors import InvalidParameterError, NearPoleError
from .medium import SourceSpec
from .mesh import UnitCellMesh, build_structured_mesh, interpolate
from .parallel import chunked, ordered_map
from .quadrature import segment_rule

logger = get_logger("fullguide")


class SolveConfig(BaseConfigModel):
    """Quadrature, cell range and contour settings for a full-guide solve."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True, arbitrary_types_allowed=True)

    n_nodes: EvenNodeCount = Field(default=32, alias="N")
    n0: GradingOrder = Field(default=6, alias="N0")
    cells: CellRange = CellRange(n_min=0, n_max=0)
    contour: Contour | None = None
    delta_policy: DeltaPolicy = DeltaPolicy()
    dispersion_h: float = Field(default=0.02, gt=0.0, le=0.5)
    dispersion_n_alpha: int = Field(default=64, ge=16)
    dispersion_n_bands: int = Field(default=6, ge=1)
    threads: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=16, ge=1)
    check_poles: bool = False
    pole_threshold: float = Field(default=DEFAULT_POLE_THRESHOLD, gt=0.0)

    @model_validator(mode="after")
    def _check_contour(self) -> "SolveConfig":
        if self.contour is not None and not self.contour.segments:
            raise ValueError("explicit contour has no segments")
        return self


@dataclass(frozen=True)
class QuadratureNode:
    """One contour node: z, its log branch, and the weight c with
    contribution c z^n w(z, .) to cell n."""

    segment: int
    index: int
    z: complex
    log_z: complex
    coefficient: complex


def contour_nodes(contour: Contour, n_nodes: int, n0: int) -> list[QuadratureNode]:
    """
    Quadrature nodes in segment-major, node-minor order.

    The coefficient is weight * orientation * z'(t) / (2 pi i z), the exact
    pull-back of dz / (2 pi i z) for the segment parameterization.
    """
    nodes: list[QuadratureNode] = []
    for s_index, segment in enumerate(contour.segments):
        a, b = segment.interval
        graded = not (isinstance(segment, Arc) and segment.is_full_circle)
        rule = segment_rule(a, b, n_nodes, n0, graded=graded)
        for index, (t, weight) in enumerate(zip(rule.nodes, rule.weights, strict=True)):
            t = float(t)
            z = segment.point(t)
            coefficient = weight * segment.orientation * segment.derivative(t) / (2j * math.pi * z)
            nodes.append(QuadratureNode(s_index, index, z, segment.log(t), complex(coefficient)))
    return nodes


@dataclass(frozen=True, eq=False)
class LapSolution:
    """Per-cell vertex values of u on Omega_n, in unit-cell coordinates."""

    cells: dict[int, NDArray[np.complex128]]
    mesh: UnitCellMesh
    metadata: dict[str, Any] = field(default_factory=dict)

    def cell(self, n: int) -> NDArray[np.complex128]:
        if n not in self.cells:
            raise InvalidParameterError(f"cell {n} not in solution range {sorted(self.cells)}")
        return self.cells[n]

    def norm(self, n: int) -> float:
        return l2_norm(self.mesh, self.cell(n))

    def norms(self) -> dict[int, float]:
        return {n: self.norm(n) for n in sorted(self.cells)}

    def trace(self, n: int = 0) -> NDArray[np.complex128]:
        """Values on the right edge x1 = 1/2 of cell n, ascending in x2."""
        return self.cell(n)[self.mesh.right_nodes]

    def restrict(self, indices: list[int]) -> "LapSolution":
        return LapSolution({n: self.cell(n) for n in indices}, self.mesh, dict(self.metadata))

    def rows(self) -> list[list[float]]:
        """CSV rows  n, x1 + n, x2, Re u, Im u."""
        x1 = self.mesh.vertices[:, 0]
        x2 = self.mesh.vertices[:, 1]
        out: list[list[float]] = []
        for n in sorted(self.cells):
            values = self.cells[n]
            out.extend(
                [n, float(x1[i] + n), float(x2[i]), float(values[i].real), float(values[i].imag)]
                for i in range(values.size)
            )
        return out


def resolve_contour(problem: CellProblem, config: SolveConfig) -> Contour:
    """The explicit contour, or one built from the dispersion diagram at k^2."""
    if config.contour is not None:
        return config.contour
    h = max(config.dispersion_h, problem.mesh.h_target)
    if h == problem.mesh.h_target:
        dispersion_problem = problem.with_k2(problem.k2, 0.0)
    else:
        dispersion_problem = CellProblem(build_structured_mesh(h), problem.medium, problem.k2, 0.0)
    n_bands = min(config.dispersion_n_bands, dispersion_problem.mesh.n_dofs // 4)
    diagram = compute_diagram(dispersion_problem, config.dispersion_n_alpha, n_bands, config.threads)
    crossings = find_crossings(diagram, dispersion_problem, problem.k2)
    return build_contour(crossings, config.delta_policy)


def _solve_node(
    problem: CellProblem,
    loads: list[CellLoad],
    node: QuadratureNode,
    config: SolveConfig,
) -> list[NDArray[np.complex128]]:
    if config.check_poles:
        indicator = singularity_indicator(problem, node.z, node.log_z)
        if indicator < config.pole_threshold:
            raise NearPoleError(node.z, indicator)
    factorization = CellFactorization(problem, node.z, node.log_z)
    return [factorization.solve(load).w_values() for load in loads]


def solve_full_batch(
    problem: CellProblem,
    sources: list[SourceSpec],
    config: SolveConfig,
) -> list[LapSolution]:
    """
    Solve the full-guide problem for several sources sharing each node's
    factorization.

    Every source is back-substituted separately and accumulated in the same
    order as a single-source solve, so each result equals the corresponding
    :func:`solve_full` call bit for bit.

    Raises:
        NearPoleError: If a node lands on a multiplier
        AssumptionViolatedError: From the automatic contour construction
    """
    started = time.perf_counter()
    contour = resolve_contour(problem, config)
    nodes = contour_nodes(contour, config.n_nodes, config.n0)
    cells = config.cells.indices()
    loads = [prepare_load(problem, source) for source in sources]
    mesh = problem.mesh
    logger.info(
        "Full-guide solve: k2=%.6g, h=%.4g, N=%d, N0=%d, %d segments, %d cell solves, %d sources",
        problem.k2, mesh.h_target, config.n_nodes, config.n0,
        len(contour.segments), len(nodes), len(sources),
    )

    totals = [
        {n: np.zeros(mesh.n_vertices, dtype=complex) for n in cells} for _ in sources
    ]
    active = [i for i, load in enumerate(loads) if not load.is_zero]
    if active:
        active_loads = [loads[i] for i in active]
        _ = problem.operators
        for chunk in chunked(nodes, config.chunk_size * config.threads):
            fields = ordered_map(
                lambda node: _solve_node(problem, active_loads, node, config), list(chunk), config.threads
            )
            for node, node_fields in zip(chunk, fields, strict=True):
                powers = {n: node.coefficient * node.z**n for n in cells}
                for slot, w in zip(active, node_fields, strict=True):
                    for n in cells:
                        totals[slot][n] += powers[n] * w
            logger.debug("Processed nodes up to segment %d node %d", chunk[-1].segment, chunk[-1].index)

    elapsed = time.perf_counter() - started
    metadata = {
        "k2": problem.k2,
        "absorption": problem.absorption,
        "h": mesh.h_target,
        "h_max": mesh.h,
        "N": config.n_nodes,
        "N0": config.n0,
        "segments": len(contour.segments),
        "cell_solves": len(nodes),
        "contour": contour.describe(),
        "elapsed_seconds": round(elapsed, 3),
    }
    logger.info("Full-guide solve finished in %.2f s", elapsed)
    return [
        LapSolution(cells=total, mesh=mesh, metadata={**metadata, "source": source.name})
        for total, source in zip(totals, sources, strict=True)
    ]


def solve_full(problem: CellProblem, source: SourceSpec, config: SolveConfig) -> LapSolution:
    """Full-guide LAP solution for one source on the configured cell range."""
    return solve_full_batch(problem, [source], config)[0]


def compare_on_mesh(
    solution: LapSolution, reference: LapSolution, n: int = 0
) -> float:
    """
    Relative L2 error of one cell against a reference on a finer nested mesh.

    The coarse field is interpolated to the reference vertices first.
    """
    values = solution.cell(n)
    if solution.mesh is not reference.mesh:
        values = interpolate(solution.mesh, values, reference.mesh.vertices)
    return relative_l2_error(reference.mesh, values, reference.cell(n))
