"""Structured triangulations of the periodic unit cell and of truncated strips.

The unit cell is (-1/2, 1/2] x (0, 1). Vertices sit on a uniform n x n grid and
each grid square is split along its rising diagonal into two triangles. The
left and right columns carry the periodic identification: a right-boundary
vertex shares the degree of freedom of its left partner at the same height.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidParameterError, OutOfDomainError

X1_MIN = -0.5
LOCATE_TOL = 1e-12


def _grid_triangles(n_columns: int, n_rows: int) -> NDArray[np.int64]:
    """Two triangles per grid square, indexed 2*(j*n_columns + i) + {0, 1}."""
    stride = n_columns + 1
    i, j = np.meshgrid(np.arange(n_columns), np.arange(n_rows))
    v00 = (j * stride + i).ravel()
    v10 = v00 + 1
    v01 = v00 + stride
    v11 = v01 + 1
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    triangles = np.empty((2 * v00.size, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    return triangles


def _grid_vertices(n_columns: int, n_rows: int, x1_min: float, spacing: float) -> NDArray[np.float64]:
    i, j = np.meshgrid(np.arange(n_columns + 1), np.arange(n_rows + 1))
    return np.stack(
        [x1_min + i.ravel() * spacing, j.ravel() * spacing], axis=1
    ).astype(float)


@dataclass(frozen=True, eq=False)
class UnitCellMesh:
    """Conforming triangulation of the unit cell with left/right node pairing."""

    n: int
    h_target: float
    vertices: NDArray[np.float64]
    triangles: NDArray[np.int64]
    left_nodes: NDArray[np.int64]
    right_nodes: NDArray[np.int64]
    pairing: NDArray[np.int64]
    dof_map: NDArray[np.int64]

    @property
    def h(self) -> float:
        """Maximum element diameter."""
        return math.sqrt(2.0) / self.n

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def n_dofs(self) -> int:
        return self.n_vertices - int(self.right_nodes.size)

    def areas(self) -> NDArray[np.float64]:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def element_diameters(self) -> NDArray[np.float64]:
        p = self.vertices[self.triangles]
        edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return np.sqrt((edges**2).sum(axis=2)).max(axis=1)

    def expand(self, dof_values: NDArray[np.generic]) -> NDArray[np.generic]:
        """Periodic dof vector to vertex values."""
        return np.asarray(dof_values)[self.dof_map]


def build_structured_mesh(h: float) -> UnitCellMesh:
    """
    Build the uniform triangulation of the unit cell for target width h.

    Args:
        h: Target mesh width, 0 < h <= 0.5

    Returns:
        Mesh with n = ceil(1/h) intervals per side

    Raises:
        InvalidParameterError: If h is outside (0, 0.5]
    """
    if not (0.0 < h <= 0.5) or not math.isfinite(h):
        raise InvalidParameterError(f"mesh width h must satisfy 0 < h <= 0.5, got {h}")
    n = math.ceil(1.0 / h - LOCATE_TOL)
    vertices = _grid_vertices(n, n, X1_MIN, 1.0 / n)
    triangles = _grid_triangles(n, n)

    rows = np.arange(n + 1)
    left_nodes = rows * (n + 1)
    right_nodes = left_nodes + n
    pairing = np.stack([left_nodes, right_nodes], axis=1)

    column = np.tile(np.arange(n + 1), n + 1)
    row = np.repeat(rows, n + 1)
    dof_map = row * n + np.where(column == n, 0, column)

    return UnitCellMesh(
        n=n,
        h_target=float(h),
        vertices=vertices,
        triangles=triangles,
        left_nodes=left_nodes,
        right_nodes=right_nodes,
        pairing=pairing,
        dof_map=dof_map,
    )


def locate_points(
    mesh: UnitCellMesh, points: ArrayLike
) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """
    Locate points in the structured mesh.

    Args:
        mesh: Unit-cell mesh
        points: Array of shape (m, 2)

    Returns:
        Triangle indices (m,) and barycentric coordinates (m, 3) ordered like
        the triangle's vertices

    Raises:
        OutOfDomainError: If any point lies outside the closed unit cell
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x1, x2 = pts[:, 0], pts[:, 1]
    outside = (
        (x1 < X1_MIN - LOCATE_TOL)
        | (x1 > -X1_MIN + LOCATE_TOL)
        | (x2 < -LOCATE_TOL)
        | (x2 > 1.0 + LOCATE_TOL)
        | ~np.isfinite(x1)
        | ~np.isfinite(x2)
    )
    if outside.any():
        bad = pts[np.argmax(outside)]
        raise OutOfDomainError(f"point ({bad[0]:.12g}, {bad[1]:.12g}) is outside the unit cell")

    n = mesh.n
    s = (x1 - X1_MIN) * n
    t = x2 * n
    i = np.clip(np.floor(s), 0, n - 1).astype(np.int64)
    j = np.clip(np.floor(t), 0, n - 1).astype(np.int64)
    s_loc = np.clip(s - i, 0.0, 1.0)
    t_loc = np.clip(t - j, 0.0, 1.0)

    lower = s_loc >= t_loc
    bary = np.where(
        lower[:, None],
        np.stack([1.0 - s_loc, s_loc - t_loc, t_loc], axis=1),
        np.stack([1.0 - t_loc, s_loc, t_loc - s_loc], axis=1),
    )
    bary = np.clip(bary, 0.0, 1.0)
    triangle = 2 * (j * n + i) + np.where(lower, 0, 1)
    return triangle, bary


def locate_point(mesh: UnitCellMesh, x: ArrayLike) -> tuple[int, NDArray[np.float64]]:
    """Triangle index and barycentric coordinates of a single point."""
    triangle, bary = locate_points(mesh, np.reshape(np.asarray(x, dtype=float), (1, 2)))
    return int(triangle[0]), bary[0]


def interpolate(
    mesh: UnitCellMesh, values: NDArray[np.generic], points: ArrayLike
) -> NDArray[np.generic]:
    """Evaluate a P1 field given at the mesh vertices at arbitrary points."""
    triangle, bary = locate_points(mesh, points)
    corner_values = np.asarray(values)[mesh.triangles[triangle]]
    return np.einsum("mk,mk->m", bary, corner_values)


def write_mesh_csv(mesh: UnitCellMesh, path: Path) -> Path:
    """Dump vertices, triangles and the boundary pairing as CSV sections."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(f"# n = {mesh.n}\n# h = {format(mesh.h, '.17g')}\n")
        writer = csv.writer(handle, lineterminator="\n")
        handle.write("# section = vertices\n")
        writer.writerow(["index", "x1", "x2"])
        for index, (x1, x2) in enumerate(mesh.vertices):
            writer.writerow([index, format(x1, ".17g"), format(x2, ".17g")])
        handle.write("# section = triangles\n")
        writer.writerow(["index", "v0", "v1", "v2"])
        for index, tri in enumerate(mesh.triangles):
            writer.writerow([index, *tri.tolist()])
        handle.write("# section = pairing\n")
        writer.writerow(["left", "right"])
        for left, right in mesh.pairing:
            writer.writerow([int(left), int(right)])
    return path


@dataclass(frozen=True, eq=False)
class TruncatedStrip:
    """
    Mesh of (-R-1/2, R+1/2) x (0, 1) made of 2R+1 aligned copies of a cell mesh.

    ``cell_vertices[c + R]`` lists the strip vertices of cell c in the vertex
    order of the unit-cell mesh.
    """

    cell_mesh: UnitCellMesh
    R: int
    vertices: NDArray[np.float64]
    triangles: NDArray[np.int64]
    cell_vertices: NDArray[np.int64]
    dirichlet_nodes: NDArray[np.int64]

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    def cells(self) -> list[int]:
        return list(range(-self.R, self.R + 1))

    def restrict(self, values: NDArray[np.generic], cell: int) -> NDArray[np.generic]:
        """Values of a strip field on cell ``cell``, in unit-cell vertex order."""
        if abs(cell) > self.R:
            raise InvalidParameterError(f"cell {cell} outside strip with R={self.R}")
        return np.asarray(values)[self.cell_vertices[cell + self.R]]


def build_strip(cell_mesh: UnitCellMesh, R: int) -> TruncatedStrip:
    """Extend a unit-cell mesh across 2R+1 cells."""
    if R < 1:
        raise InvalidParameterError(f"strip half-length R must be >= 1, got {R}")
    n = cell_mesh.n
    n_columns = (2 * R + 1) * n
    vertices = _grid_vertices(n_columns, n, X1_MIN - R, 1.0 / n)
    triangles = _grid_triangles(n_columns, n)

    column = np.tile(np.arange(n + 1), n + 1)
    row = np.repeat(np.arange(n + 1), n + 1)
    cell_vertices = np.stack(
        [row * (n_columns + 1) + column + c * n for c in range(2 * R + 1)]
    )
    rows = np.arange(n + 1) * (n_columns + 1)
    dirichlet_nodes = np.concatenate([rows, rows + n_columns])
    return TruncatedStrip(
        cell_mesh=cell_mesh,
        R=R,
        vertices=vertices,
        triangles=triangles,
        cell_vertices=cell_vertices,
        dirichlet_nodes=dirichlet_nodes,
    )
