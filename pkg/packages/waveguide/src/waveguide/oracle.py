"""Brute-force reference solutions with absorption on a truncated strip.

With absorption eps > 0 the waveguide problem has a unique decaying solution,
so a long strip with homogeneous Dirichlet ends approximates it well. The LAP
solution is then estimated by extrapolating eps -> 0 from three solves.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import NDArray

from shared import get_logger

from .assembly import element_geometry, l2_norm
from .cell_solver import CellProblem, RESIDUAL_TOL
from .errors import InvalidParameterError, NearPoleError, NumericalFailureError
from .medium import SourceSpec, periodic_x1
from .mesh import TruncatedStrip
from .parallel import ordered_map
from .quadrature import segment_rule

logger = get_logger("oracle")

MIN_STRIP_CELLS = 5
UNRELIABLE_RATIO = 0.9


@dataclass(frozen=True, eq=False)
class StripField:
    """Vertex values of an absorbing solution on a truncated strip."""

    strip: TruncatedStrip
    values: NDArray[np.complex128]
    absorption: float
    residual: float

    def cell(self, n: int) -> NDArray[np.complex128]:
        return self.strip.restrict(self.values, n)

    def cell_norms(self) -> dict[int, float]:
        mesh = self.strip.cell_mesh
        return {n: l2_norm(mesh, self.cell(n)) for n in self.strip.cells()}


def solve_absorbing(
    problem: CellProblem, source: SourceSpec, strip: TruncatedStrip
) -> StripField:
    """
    Solve  Delta u + (k^2 + i eps) q u = f  on the strip with Dirichlet ends.

    The source is restricted to the unit cell |x1| <= 1/2.

    Raises:
        InvalidParameterError: If eps <= 0 or R < 5, or the meshes differ
    """
    if not problem.absorption > 0.0:
        raise InvalidParameterError(f"absorbing solve needs eps > 0, got {problem.absorption}")
    if strip.R < MIN_STRIP_CELLS:
        raise InvalidParameterError(f"strip half-length R must be >= {MIN_STRIP_CELLS}, got {strip.R}")
    if strip.cell_mesh is not problem.mesh:
        raise InvalidParameterError("strip must be built from the problem's cell mesh")

    geometry = element_geometry(strip)
    x1, x2 = geometry.quad_x1, geometry.quad_x2
    q = problem.medium.evaluate(periodic_x1(x1), x2)
    inside = np.abs(x1) <= 0.5
    f = np.where(inside, source.evaluate(np.clip(x1, -0.5, 0.5), x2), 0.0)

    matrix = (
        geometry.stiffness() - (problem.k2 + 1j * problem.absorption) * geometry.weighted_mass(q)
    ).tocsr()
    rhs = -geometry.load(f)

    free = np.setdiff1d(np.arange(strip.n_vertices), strip.dirichlet_nodes)
    reduced = sp.csc_matrix(matrix[free][:, free], dtype=complex)
    reduced_rhs = rhs[free]
    values = np.zeros(strip.n_vertices, dtype=complex)
    rhs_norm = float(np.linalg.norm(reduced_rhs))
    residual = 0.0
    if rhs_norm > 0.0:
        try:
            lu = spla.splu(reduced)
        except RuntimeError as exc:
            raise NearPoleError(complex(1.0), 0.0, "strip matrix exactly singular") from exc
        solution = lu.solve(reduced_rhs)
        residual = float(np.linalg.norm(reduced_rhs - reduced @ solution)) / rhs_norm
        if residual > 0.01 * RESIDUAL_TOL:
            solution = solution + lu.solve(reduced_rhs - reduced @ solution)
            residual = float(np.linalg.norm(reduced_rhs - reduced @ solution)) / rhs_norm
        if residual > RESIDUAL_TOL:
            raise NumericalFailureError(
                f"strip solve residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}",
                {"eps": problem.absorption, "R": strip.R, "residual": residual},
            )
        values[free] = solution

    field = StripField(strip, values, problem.absorption, residual)
    logger.debug("absorbing solve eps=%.3e R=%d residual=%.2e", problem.absorption, strip.R, residual)
    return field


def solve_absorbing_sweep(
    problem: CellProblem,
    source: SourceSpec,
    strip: TruncatedStrip,
    epsilons: Sequence[float],
    threads: int = 1,
) -> list[StripField]:
    """Independent absorbing solves for several eps values, in input order."""
    problems = [problem.with_k2(problem.k2, float(eps)) for eps in epsilons]
    logger.info("Absorbing solves: k2=%.6g, R=%d, eps=%s", problem.k2, strip.R, list(epsilons))
    return ordered_map(lambda p: solve_absorbing(p, source, strip), problems, threads)


@dataclass(frozen=True, eq=False)
class Extrapolation:
    values: NDArray[np.complex128]
    ratio: float
    warning: str | None = None


def extrapolate_lap(
    fields: Sequence[NDArray[np.complex128]], epsilons: Sequence[float]
) -> Extrapolation:
    """
    Neville extrapolation of fields given at decreasing eps to eps = 0.

    For eps, eps/2, eps/4 this is  u(eps)/3 - 2 u(eps/2) + 8 u(eps/4)/3. The
    diagnostic ratio ||u3 - u2|| / ||u2 - u1|| of the last three fields should
    be about 1/2; above 0.9 a warning is attached.

    Raises:
        InvalidParameterError: If fewer than two fields are given or eps does
            not strictly decrease
    """
    if len(fields) != len(epsilons) or len(fields) < 2:
        raise InvalidParameterError("need matching fields and eps values, at least two")
    eps = [float(e) for e in epsilons]
    if any(not b < a for a, b in zip(eps, eps[1:], strict=False)) or eps[-1] <= 0.0:
        raise InvalidParameterError(f"eps values must be positive and strictly decreasing: {eps}")

    table = [np.asarray(f, dtype=complex) for f in fields]
    for level in range(1, len(table)):
        table = [
            (eps[i] * table[i + 1] - eps[i + level] * table[i]) / (eps[i] - eps[i + level])
            for i in range(len(table) - 1)
        ]
    values = table[0]

    tail = [np.asarray(f, dtype=complex) for f in fields[-3:]]
    ratio = 0.0
    if len(tail) == 3:
        previous = float(np.linalg.norm(tail[1] - tail[0]))
        last = float(np.linalg.norm(tail[2] - tail[1]))
        ratio = last / previous if previous > 0.0 else 0.0
    warning = None
    if ratio > UNRELIABLE_RATIO:
        warning = f"extrapolation unreliable: difference ratio {ratio:.3f} > {UNRELIABLE_RATIO}"
        logger.warning(warning)
    return Extrapolation(values=values, ratio=ratio, warning=warning)


def bloch_transform_truncated(field: StripField, z: complex, n_max: int) -> NDArray[np.complex128]:
    """
    Sum over |n| <= n_max of u(x1 + n, x2) z^{-n} at the unit-cell vertices.

    Raises:
        InvalidParameterError: If |z| != 1 or n_max exceeds the strip half-length
    """
    z = complex(z)
    if abs(abs(z) - 1.0) > 1e-12:
        raise InvalidParameterError(f"Bloch transform needs |z| = 1, got |z|={abs(z):.15g}")
    if not 0 <= n_max <= field.strip.R:
        raise InvalidParameterError(f"n_max={n_max} must be in [0, R={field.strip.R}]")
    total = np.zeros(field.strip.cell_mesh.n_vertices, dtype=complex)
    for n in range(-n_max, n_max + 1):
        total += field.cell(n) * z ** (-n)
    return total


def inverse_bloch_transform(
    transform: Callable[[complex], NDArray[np.complex128]], n: int, n_nodes: int
) -> NDArray[np.complex128]:
    """
    (1/2 pi i) oint_{S^1} T(z) z^{n-1} dz by the periodic trapezoid rule,
    i.e. (1/2 pi) int T(e^{it}) e^{int} dt.
    """
    rule = segment_rule(-math.pi, math.pi, n_nodes, graded=False)
    total: NDArray[np.complex128] | None = None
    for t, weight in zip(rule.nodes, rule.weights, strict=True):
        z = complex(math.cos(t), math.sin(t))
        term = (weight / (2.0 * math.pi)) * transform(z) * z**n
        total = term if total is None else total + term
    assert total is not None
    return total
