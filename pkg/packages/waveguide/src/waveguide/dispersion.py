"""Band functions, crossings with k^2 and stop bands.

For z = e^{i alpha} the homogeneous cell problem becomes the Hermitian pencil

    A(alpha) v = mu B v,   A(alpha) = K + i alpha C + alpha^2 M,   B = M_q,

whose eigenvalues mu_n(alpha), sorted per alpha, are the band functions.
Unit-circle Floquet multipliers at wavenumber k are the points where a band
equals k^2; the sign of the band slope there tells whether the Bloch wave
travels right (RUS) or left (LUS).
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla
from numpy.typing import NDArray
from scipy.optimize import brentq, minimize_scalar

from shared import get_logger

from .cell_solver import CellProblem, singularity_indicator
from .errors import AssumptionViolatedError, InvalidParameterError, NumericalFailureError
from .parallel import ordered_map

logger = get_logger("dispersion")

DENSE_EIGEN_LIMIT = 2000
EIGEN_RESIDUAL_TOL = 1e-8
CROSSING_TOL = 1e-8
SLOPE_TOL = 1e-6
FD_STEP = 1e-4
FD_AGREEMENT = 1e-3
MERGE_TOL = 1e-6
EXTREMUM_XTOL = 1e-4
GAP_SAMPLES = 33


class CrossingClass(str, Enum):
    """Direction of the Bloch wave at a unit-circle multiplier."""

    RUS = "RUS"
    LUS = "LUS"
    SUS = "SUS"


def wrap_angle(alpha: float) -> float:
    """Map an angle to (-pi, pi]."""
    wrapped = math.remainder(alpha, 2.0 * math.pi)
    return math.pi if wrapped <= -math.pi else wrapped


def _circular_distance(a: float, b: float) -> float:
    return abs(math.remainder(a - b, 2.0 * math.pi))


def band_pairs(
    problem: CellProblem, alpha: float, n_bands: int
) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
    """
    Smallest eigenpairs of the pencil at quasi-momentum alpha.

    Returns:
        Ascending eigenvalues (clipped at 0) and B-normalized eigenvectors as columns

    Raises:
        InvalidParameterError: If n_bands is not in [1, dofs/4]
        NumericalFailureError: If the eigensolver fails or a residual check fails
    """
    n_dofs = problem.mesh.n_dofs
    if n_bands < 1 or n_bands > n_dofs // 4:
        raise InvalidParameterError(
            f"n_bands must be in [1, {n_dofs // 4}] for {n_dofs} dofs, got {n_bands}"
        )
    operators = problem.operators
    A = operators.pencil(alpha)
    B = operators.weighted_mass.astype(complex)

    try:
        if n_dofs <= DENSE_EIGEN_LIMIT:
            values, vectors = la.eigh(
                A.toarray(), B.toarray(), subset_by_index=[0, n_bands - 1]
            )
        else:
            values, vectors = spla.eigsh(
                A.tocsc(),
                k=n_bands,
                M=B.tocsc(),
                sigma=-1.0,
                which="LM",
                v0=np.ones(n_dofs, dtype=complex),
            )
            values = np.real(values)
            order = np.argsort(values, kind="stable")
            values, vectors = values[order], vectors[:, order]
    except (la.LinAlgError, spla.ArpackError, spla.ArpackNoConvergence) as exc:
        raise NumericalFailureError(
            f"band eigensolve failed at alpha={alpha:.12g}",
            {"alpha": alpha, "n_bands": n_bands, "n_dofs": n_dofs},
        ) from exc

    values = np.asarray(values, dtype=float)
    scale_a = float(spla.norm(A, 1))
    scale_b = float(spla.norm(B, 1))
    for index in range(n_bands):
        v = vectors[:, index]
        mu = values[index]
        residual = float(np.linalg.norm(A @ v - mu * (B @ v)))
        bound = EIGEN_RESIDUAL_TOL * (scale_a + abs(mu) * scale_b) * float(np.linalg.norm(v))
        if residual > bound:
            raise NumericalFailureError(
                f"eigenpair {index} at alpha={alpha:.12g} has residual {residual:.3e}",
                {"alpha": alpha, "band": index, "residual": residual, "bound": bound},
            )
    if values.min() < -1e-8 * max(1.0, float(values.max())):
        raise NumericalFailureError(
            f"negative band value {values.min():.3e} at alpha={alpha:.12g}",
            {"alpha": alpha, "values": values.tolist()},
        )
    return np.maximum(values, 0.0), vectors


def band_eigenvalues(problem: CellProblem, alpha: float, n_bands: int) -> NDArray[np.float64]:
    """The n_bands smallest band values mu_n(alpha), ascending."""
    values, _ = band_pairs(problem, alpha, n_bands)
    return values


def _band_value(problem: CellProblem, alpha: float, band: int) -> float:
    return float(band_eigenvalues(problem, alpha, band + 1)[band])


def band_slope(problem: CellProblem, alpha: float, band: int) -> float:
    """Hellmann-Feynman slope  v^H A'(alpha) v / v^H B v  of one band."""
    _, vectors = band_pairs(problem, alpha, band + 1)
    v = vectors[:, band]
    operators = problem.operators
    numerator = np.vdot(v, operators.pencil_derivative(alpha) @ v)
    denominator = np.vdot(v, operators.weighted_mass @ v)
    return float(np.real(numerator) / np.real(denominator))


@dataclass(frozen=True, eq=False)
class DispersionDiagram:
    """Band values on the grid alpha_i = -pi + 2 pi i / n_alpha, i = 1..n_alpha."""

    alphas: NDArray[np.float64]
    bands: NDArray[np.float64]
    problem: CellProblem | None = field(default=None, repr=False)

    @property
    def n_bands(self) -> int:
        return int(self.bands.shape[0])

    @property
    def n_alpha(self) -> int:
        return int(self.alphas.size)

    def wrapped(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Grid extended by alpha = -pi, where the bands repeat their values at pi."""
        alphas = np.concatenate([[-np.pi], self.alphas])
        bands = np.concatenate([self.bands[:, -1:], self.bands], axis=1)
        return alphas, bands

    def rows(self) -> list[list[float]]:
        return [[float(a), *map(float, self.bands[:, i])] for i, a in enumerate(self.alphas)]


def alpha_grid(n_alpha: int) -> NDArray[np.float64]:
    return -np.pi + 2.0 * np.pi * np.arange(1, n_alpha + 1) / n_alpha


def compute_diagram(
    problem: CellProblem, n_alpha: int = 64, n_bands: int = 6, threads: int = 1
) -> DispersionDiagram:
    """
    Evaluate the first n_bands band functions on a uniform alpha grid.

    Raises:
        InvalidParameterError: If n_alpha < 16 or n_bands is too large
    """
    if n_alpha < 16:
        raise InvalidParameterError(f"n_alpha must be >= 16, got {n_alpha}")
    alphas = alpha_grid(n_alpha)
    _ = problem.operators  # assemble once before the workers share it
    logger.info(
        "Computing dispersion diagram: %d alphas, %d bands, %d dofs",
        n_alpha, n_bands, problem.mesh.n_dofs,
    )
    columns = ordered_map(
        lambda alpha: band_eigenvalues(problem, float(alpha), n_bands), list(alphas), threads
    )
    return DispersionDiagram(alphas=alphas, bands=np.stack(columns, axis=1), problem=problem)


@dataclass(frozen=True)
class Crossing:
    """A solution of mu_n(alpha) = k^2 on the unit circle."""

    alpha: float
    band: int
    slope: float
    crossing_class: CrossingClass
    fd_slope: float = float("nan")

    @property
    def z(self) -> complex:
        return complex(math.cos(self.alpha), math.sin(self.alpha))


def _classify(slope: float) -> CrossingClass:
    if slope > SLOPE_TOL:
        return CrossingClass.RUS
    if slope < -SLOPE_TOL:
        return CrossingClass.LUS
    return CrossingClass.SUS


def _refine_crossing(
    problem: CellProblem, band: int, k2: float, left: float, right: float, g_right: float
) -> float:
    if g_right == 0.0:
        return right

    def residual(alpha: float) -> float:
        return _band_value(problem, alpha, band) - k2

    g_left, g_right = residual(left), residual(right)
    if g_left == 0.0:
        return left
    if g_right == 0.0:
        return right
    if g_left * g_right > 0.0:
        raise NumericalFailureError(
            f"band {band} lost its sign change on [{left:.6g}, {right:.6g}]",
            {"band": band, "left": left, "right": right},
        )
    return float(brentq(residual, left, right, xtol=1e-13, rtol=1e-15, maxiter=200))


def find_crossings(
    diagram: DispersionDiagram, problem: CellProblem, k2: float
) -> list[Crossing]:
    """
    Locate and classify all unit-circle crossings of the bands with k^2.

    Raises:
        AssumptionViolatedError: On a stationary crossing or when a right- and a
            left-going crossing coincide within the merge tolerance
    """
    alphas, bands = diagram.wrapped()
    found: list[Crossing] = []
    for band in range(diagram.n_bands):
        g = bands[band] - k2
        for i in range(alphas.size - 1):
            g0, g1 = g[i], g[i + 1]
            if not ((g0 < 0.0 <= g1) or (g0 > 0.0 >= g1)):
                continue
            alpha = _refine_crossing(problem, band, k2, float(alphas[i]), float(alphas[i + 1]), float(g1))
            mismatch = abs(_band_value(problem, alpha, band) - k2)
            if mismatch > CROSSING_TOL * max(k2, 1.0):
                raise NumericalFailureError(
                    f"crossing refinement stalled at alpha={alpha:.12g} (|mu-k2|={mismatch:.3e})",
                    {"alpha": alpha, "band": band, "mismatch": mismatch},
                )
            slope = band_slope(problem, alpha, band)
            fd_slope = (
                _band_value(problem, alpha + FD_STEP, band)
                - _band_value(problem, alpha - FD_STEP, band)
            ) / (2.0 * FD_STEP)
            if abs(slope - fd_slope) > FD_AGREEMENT * max(abs(slope), abs(fd_slope), SLOPE_TOL):
                logger.warning(
                    "Slope mismatch at alpha=%.6f band %d: Rayleigh %.6g vs difference %.6g",
                    alpha, band, slope, fd_slope,
                )
            crossing = Crossing(
                alpha=wrap_angle(alpha),
                band=band,
                slope=slope,
                crossing_class=_classify(slope),
                fd_slope=fd_slope,
            )
            if crossing.crossing_class is CrossingClass.SUS:
                raise AssumptionViolatedError(
                    f"stationary crossing at alpha={crossing.alpha:.12g} (slope {slope:.3e})",
                    [crossing],
                )
            found.append(crossing)

    found.sort(key=lambda c: (c.alpha, c.band))
    merged: list[Crossing] = []
    for crossing in found:
        duplicate = next(
            (m for m in merged if _circular_distance(m.alpha, crossing.alpha) < MERGE_TOL), None
        )
        if duplicate is None:
            merged.append(crossing)
        elif duplicate.crossing_class is not crossing.crossing_class:
            raise AssumptionViolatedError(
                f"right- and left-going crossings coincide near alpha={crossing.alpha:.12g}",
                [duplicate, crossing],
            )
    logger.info("Found %d crossings for k2=%.6g", len(merged), k2)
    return merged


def _refine_extremum(
    problem: CellProblem, band: int, center: float, step: float, sign: float
) -> tuple[float, float]:
    result = minimize_scalar(
        lambda alpha: sign * _band_value(problem, wrap_angle(alpha), band),
        bounds=(center - step, center + step),
        method="bounded",
        options={"xatol": EXTREMUM_XTOL},
    )
    return sign * float(result.fun), wrap_angle(float(result.x))


def _gap_survives(
    problem: CellProblem,
    lower: tuple[int, float],
    upper: tuple[int, float],
    width: float,
    step: float,
) -> bool:
    """
    Resample the two bands bounding a gap around their extrema.

    Bands that touch or cross leave a sliver between the sampled maximum of the
    lower band and minimum of the upper band no wider than the slope times the
    sample spacing; such slivers are not stop bands.
    """
    (lower_band, lower_alpha), (upper_band, upper_alpha) = lower, upper
    n_bands = max(lower_band, upper_band) + 1
    spacing = 2.0 * step / (GAP_SAMPLES - 1)
    top, bottom, slope = -math.inf, math.inf, 0.0
    for center in (lower_alpha, upper_alpha):
        alphas = np.linspace(center - step, center + step, GAP_SAMPLES)
        values = np.stack(
            [band_eigenvalues(problem, wrap_angle(float(a)), n_bands) for a in alphas], axis=1
        )
        top = max(top, float(values[lower_band].max()))
        bottom = min(bottom, float(values[upper_band].min()))
        edges = values[[lower_band, upper_band]]
        slope = max(slope, float(np.abs(np.diff(edges, axis=1)).max()) / spacing)
    closed = bottom - top <= slope * spacing
    if closed:
        logger.info(
            "Discarding sliver of width %.3g between bands %d and %d: they meet within the sampling",
            width, lower_band, upper_band,
        )
    return not closed


def stop_bands(
    diagram: DispersionDiagram,
    k2_range: tuple[float, float],
    problem: CellProblem | None = None,
) -> list[tuple[float, float]]:
    """
    Maximal subintervals of k2_range not covered by any computed band.

    When a problem is available (argument or the diagram's own), band extrema
    are refined between grid neighbours and every gap between two bands is
    resampled around their extrema, dropping slivers left where the bands
    touch. The search stops at the maximum of the highest computed band, since
    coverage above it is unknown.
    """
    low, high = float(k2_range[0]), float(k2_range[1])
    if not low < high:
        raise InvalidParameterError(f"empty k2 range [{low}, {high}]")
    problem = problem or diagram.problem
    step = 2.0 * np.pi / diagram.n_alpha

    # (min, max, band, alpha at min, alpha at max)
    covered: list[tuple[float, float, int, float, float]] = []
    for band in range(diagram.n_bands):
        values = diagram.bands[band]
        i_min, i_max = int(np.argmin(values)), int(np.argmax(values))
        band_min, band_max = float(values[i_min]), float(values[i_max])
        alpha_min, alpha_max = float(diagram.alphas[i_min]), float(diagram.alphas[i_max])
        if problem is not None:
            refined_min, refined_alpha = _refine_extremum(problem, band, alpha_min, step, 1.0)
            if refined_min < band_min:
                band_min, alpha_min = refined_min, refined_alpha
            refined_max, refined_alpha = _refine_extremum(problem, band, alpha_max, step, -1.0)
            if refined_max > band_max:
                band_max, alpha_max = refined_max, refined_alpha
        covered.append((band_min, band_max, band, alpha_min, alpha_max))

    top = max(entry[1] for entry in covered)
    if high > top:
        logger.warning(
            "Stop-band search clipped at %.6g: highest computed band ends there", top
        )
        high = top

    gaps: list[tuple[float, float]] = []
    cursor = low
    cursor_edge: tuple[int, float] | None = None
    for band_min, band_max, band, alpha_min, alpha_max in sorted(covered):
        if band_min > cursor and cursor < high:
            gap_end = min(band_min, high)
            width = gap_end - cursor
            if width > 1e-12 and (
                problem is None
                or cursor_edge is None
                or _gap_survives(problem, cursor_edge, (band, alpha_min), width, step)
            ):
                gaps.append((cursor, gap_end))
        if band_max > cursor:
            cursor, cursor_edge = band_max, (band, alpha_max)
    return gaps


@dataclass(frozen=True, eq=False)
class IndicatorScan:
    """Singularity indicator on a polar grid radii x thetas."""

    radii: NDArray[np.float64]
    thetas: NDArray[np.float64]
    values: NDArray[np.float64]

    def points(self) -> NDArray[np.complex128]:
        return self.radii[:, None] * np.exp(1j * self.thetas[None, :])

    def rows(self) -> list[list[float]]:
        z = self.points()
        return [
            [float(z[i, j].real), float(z[i, j].imag), float(self.values[i, j])]
            for i in range(self.radii.size)
            for j in range(self.thetas.size)
        ]


def multiplier_scan(
    problem: CellProblem,
    radial_range: tuple[float, float],
    grid: tuple[int, int],
    threads: int = 1,
) -> IndicatorScan:
    """
    Singularity indicator on geometrically spaced radii and mid-cell angles.

    Angles theta_j = -pi + 2 pi (j + 1/2) / n_theta stay off the branch cut and
    are symmetric under theta -> -theta; with r_min = 1/r_max the radii are
    symmetric under r -> 1/r.
    """
    r_min, r_max = radial_range
    n_r, n_theta = grid
    if not (0.0 < r_min < 1.0 < r_max):
        raise InvalidParameterError(f"need 0 < r_min < 1 < r_max, got [{r_min}, {r_max}]")
    if n_r < 2 or n_theta < 4:
        raise InvalidParameterError(f"scan grid too small: {grid}")
    radii = np.geomspace(r_min, r_max, n_r)
    thetas = -np.pi + 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    points = [complex(r * np.cos(t), r * np.sin(t)) for r in radii for t in thetas]
    _ = problem.operators
    logger.info("Scanning indicator on %d x %d polar grid", n_r, n_theta)
    values = ordered_map(lambda z: singularity_indicator(problem, z), points, threads)
    return IndicatorScan(radii=radii, thetas=thetas, values=np.reshape(values, (n_r, n_theta)))
