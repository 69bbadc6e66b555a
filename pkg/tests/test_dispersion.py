"""Tests for band functions, crossings, stop bands and indicator scans."""

import math

import numpy as np
import pytest

from waveguide.cell_solver import CellProblem
from waveguide.dispersion import (
    CrossingClass,
    DispersionDiagram,
    alpha_grid,
    band_eigenvalues,
    band_slope,
    compute_diagram,
    find_crossings,
    multiplier_scan,
    stop_bands,
    wrap_angle,
)
from waveguide.errors import InvalidParameterError
from waveguide.medium import MediumSpec, ring_medium
from waveguide.mesh import build_structured_mesh


@pytest.fixture(scope="module")
def homogeneous_problem():
    return CellProblem(mesh=build_structured_mesh(0.05), medium=MediumSpec.homogeneous(), k2=5.0)


@pytest.fixture(scope="module")
def coarse_homogeneous():
    return CellProblem(mesh=build_structured_mesh(0.1), medium=MediumSpec.homogeneous(), k2=5.0)


@pytest.fixture(scope="module")
def coarse_ring():
    return CellProblem(mesh=build_structured_mesh(0.1), medium=ring_medium(), k2=17.0)


class TestBandEigenvalues:
    """Tests for the Hermitian pencil eigenvalues."""

    def test_homogeneous_values_at_zero(self, homogeneous_problem):
        """q = 1 at alpha = 0 gives 0, pi^2, 4 pi^2, 4 pi^2."""
        values = band_eigenvalues(homogeneous_problem, 0.0, 4)
        assert values[0] == pytest.approx(0.0, abs=1e-8)
        expected = [math.pi**2, 4 * math.pi**2, 4 * math.pi**2]
        np.testing.assert_allclose(values[1:], expected, rtol=2e-2)

    @pytest.mark.parametrize("alpha", [0.5, -1.0, 2.0, math.pi])
    def test_homogeneous_first_band_is_alpha_squared(self, homogeneous_problem, alpha):
        """The periodic constant is an exact eigenvector with mu = alpha^2."""
        values = band_eigenvalues(homogeneous_problem, alpha, 2)
        assert values[0] == pytest.approx(alpha**2, rel=1e-9)

    def test_ascending_and_nonnegative(self, coarse_ring):
        """Band values are nonnegative and sorted."""
        values = band_eigenvalues(coarse_ring, 1.3, 6)
        assert np.all(values >= 0.0)
        assert np.all(np.diff(values) >= 0.0)

    def test_slope_matches_derivative(self, homogeneous_problem):
        """The Hellmann-Feynman slope of the first band is 2 alpha for q = 1."""
        assert band_slope(homogeneous_problem, 1.2, 0) == pytest.approx(2.4, rel=1e-8)

    def test_too_many_bands_rejected(self, coarse_ring):
        """n_bands above a quarter of the dofs is rejected."""
        with pytest.raises(InvalidParameterError):
            band_eigenvalues(coarse_ring, 0.0, coarse_ring.mesh.n_dofs)


class TestDispersionDiagram:
    """Tests for compute_diagram."""

    def test_grid(self):
        """The alpha grid runs from -pi + 2 pi/n to pi."""
        grid = alpha_grid(16)
        assert grid.size == 16
        assert grid[-1] == pytest.approx(math.pi)
        assert grid[0] == pytest.approx(-math.pi + math.pi / 8)

    def test_time_reversal_symmetry(self, coarse_ring):
        """Columns at alpha and -alpha agree for a real medium."""
        diagram = compute_diagram(coarse_ring, n_alpha=16, n_bands=4)
        assert diagram.bands.shape == (4, 16)
        for i, alpha in enumerate(diagram.alphas):
            mirror = np.flatnonzero(np.isclose(diagram.alphas, -alpha, atol=1e-12))
            if mirror.size:
                np.testing.assert_allclose(
                    diagram.bands[:, mirror[0]], diagram.bands[:, i], rtol=1e-8, atol=1e-8
                )

    def test_threads_do_not_change_values(self, coarse_ring):
        """Parallel evaluation returns the same diagram."""
        serial = compute_diagram(coarse_ring, n_alpha=16, n_bands=3, threads=1)
        parallel = compute_diagram(coarse_ring, n_alpha=16, n_bands=3, threads=4)
        np.testing.assert_allclose(serial.bands, parallel.bands, rtol=1e-12, atol=1e-12)

    def test_wrapped_repeats_last_column(self, coarse_ring):
        """The wrapped grid starts at -pi with the values at pi."""
        diagram = compute_diagram(coarse_ring, n_alpha=16, n_bands=2)
        alphas, bands = diagram.wrapped()
        assert alphas[0] == pytest.approx(-math.pi)
        np.testing.assert_array_equal(bands[:, 0], diagram.bands[:, -1])

    def test_rows(self, coarse_ring):
        """CSV rows hold alpha followed by every band value."""
        diagram = compute_diagram(coarse_ring, n_alpha=16, n_bands=2)
        rows = diagram.rows()
        assert len(rows) == 16
        assert len(rows[0]) == 3

    def test_rejects_coarse_grid(self, coarse_ring):
        """Fewer than 16 alpha values are rejected."""
        with pytest.raises(InvalidParameterError):
            compute_diagram(coarse_ring, n_alpha=8)


class TestCrossings:
    """Tests for find_crossings."""

    def test_homogeneous_crossings(self, coarse_homogeneous):
        """q = 1, k^2 = 5 crosses at +-sqrt(5), right-going at +sqrt(5)."""
        diagram = compute_diagram(coarse_homogeneous, n_alpha=32, n_bands=4)
        crossings = find_crossings(diagram, coarse_homogeneous, 5.0)
        assert len(crossings) == 2
        left, right = crossings
        assert left.alpha == pytest.approx(-math.sqrt(5.0), abs=1e-8)
        assert right.alpha == pytest.approx(math.sqrt(5.0), abs=1e-8)
        assert right.crossing_class is CrossingClass.RUS
        assert left.crossing_class is CrossingClass.LUS
        assert right.slope == pytest.approx(2.0 * math.sqrt(5.0), rel=1e-6)
        assert right.fd_slope == pytest.approx(right.slope, rel=1e-3)
        assert abs(right.z) == pytest.approx(1.0)

    def test_ring_crossings_come_in_pairs(self, coarse_ring):
        """Crossings of a real medium pair up at +-alpha with opposite classes."""
        diagram = compute_diagram(coarse_ring, n_alpha=32, n_bands=6)
        crossings = find_crossings(diagram, coarse_ring, 17.0)
        assert crossings
        for crossing in crossings:
            if abs(abs(crossing.alpha) - math.pi) < 1e-6:
                continue
            partners = [c for c in crossings if abs(c.alpha + crossing.alpha) < 1e-6]
            assert len(partners) == 1
            assert partners[0].crossing_class is not crossing.crossing_class

    def test_no_crossings_below_spectrum(self, coarse_homogeneous):
        """A level below every band produces no crossings."""
        diagram = compute_diagram(coarse_homogeneous, n_alpha=16, n_bands=2)
        assert find_crossings(diagram, coarse_homogeneous, -1.0) == []

    def test_small_level_crosses_near_zero(self, coarse_homogeneous):
        """A small k^2 is crossed by the first band at +-k."""
        diagram = compute_diagram(coarse_homogeneous, n_alpha=16, n_bands=2)
        crossings = find_crossings(diagram, coarse_homogeneous, 1e-2)
        np.testing.assert_allclose([c.alpha for c in crossings], [-0.1, 0.1], atol=1e-8)

    def test_wrap_angle(self):
        """Angles wrap into (-pi, pi]."""
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)

    @pytest.mark.slow
    def test_ring_reference_crossing(self):
        """Ring medium at k^2 = 17 crosses near alpha = +-0.9576, right-going at +."""
        problem = CellProblem(mesh=build_structured_mesh(0.025), medium=ring_medium(), k2=17.0)
        diagram = compute_diagram(problem, n_alpha=64, n_bands=6, threads=4)
        crossings = find_crossings(diagram, problem, 17.0)
        positive = [c for c in crossings if abs(c.alpha - 0.9576) < 0.02]
        negative = [c for c in crossings if abs(c.alpha + 0.9576) < 0.02]
        assert positive and positive[0].crossing_class is CrossingClass.RUS
        assert negative and negative[0].crossing_class is CrossingClass.LUS


class TestStopBands:
    """Tests for stop_bands."""

    def test_gaps_between_synthetic_bands(self):
        """Uncovered intervals are reported and the search stops at the top band."""
        alphas = alpha_grid(16)
        shape = np.cos(alphas) ** 2
        bands = np.stack([1.0 + 2.0 * shape, 5.0 + 3.0 * shape, 7.5 + 2.5 * shape])
        diagram = DispersionDiagram(alphas=alphas, bands=bands)
        gaps = stop_bands(diagram, (0.0, 12.0))
        assert len(gaps) == 2
        np.testing.assert_allclose(gaps[0], (0.0, bands[0].min()))
        np.testing.assert_allclose(gaps[1], (bands[0].max(), bands[1].min()))

    def test_touching_bands_leave_no_gap(self, coarse_homogeneous):
        """Sorted bands that meet at a crossing do not produce sliver gaps."""
        diagram = compute_diagram(coarse_homogeneous, n_alpha=16, n_bands=4)
        assert stop_bands(diagram, (0.5, 15.0)) == []

    def test_ring_gap_contains_stop_band_level(self, coarse_ring):
        """k^2 = 5 lies inside the first stop band of the ring medium."""
        diagram = compute_diagram(coarse_ring, n_alpha=32, n_bands=4)
        gaps = stop_bands(diagram, (0.5, 7.0))
        assert len(gaps) == 1
        assert gaps[0][0] < 5.0
        assert gaps[0][1] == pytest.approx(7.0)

    def test_empty_range_rejected(self):
        """k2_min >= k2_max is rejected."""
        alphas = alpha_grid(16)
        diagram = DispersionDiagram(alphas=alphas, bands=np.ones((1, 16)))
        with pytest.raises(InvalidParameterError):
            stop_bands(diagram, (3.0, 3.0))


@pytest.mark.slow
class TestReferenceDiagrams:
    """Fine-mesh diagrams against closed-form bands and published ring stop bands."""

    def test_homogeneous_bands_match_enumeration(self):
        """q = 1: the first five bands follow j^2 pi^2 + (alpha + 2 pi m)^2."""
        problem = CellProblem(mesh=build_structured_mesh(0.02), medium=MediumSpec.homogeneous(), k2=5.0)
        diagram = compute_diagram(problem, n_alpha=65, n_bands=5, threads=4)
        for i, alpha in enumerate(diagram.alphas):
            exact = sorted(
                (j * math.pi) ** 2 + (alpha + 2.0 * math.pi * m) ** 2
                for j in range(4)
                for m in range(-3, 4)
            )[:5]
            np.testing.assert_allclose(diagram.bands[:, i], exact, rtol=1e-2, atol=1e-8)

    def test_ring_stop_bands(self):
        """The ring medium has exactly two stop bands below 16, near (2.956, 7.574) and (13.41, 15.49)."""
        problem = CellProblem(mesh=build_structured_mesh(0.01), medium=ring_medium(), k2=5.0)
        diagram = compute_diagram(problem, n_alpha=64, n_bands=8, threads=4)
        gaps = stop_bands(diagram, (0.0, 16.0))
        assert len(gaps) == 2
        np.testing.assert_allclose(gaps, [(2.956, 7.574), (13.41, 15.49)], atol=0.05)


class TestMultiplierScan:
    """Tests for multiplier_scan."""

    @pytest.fixture(scope="class")
    def scan(self):
        problem = CellProblem(mesh=build_structured_mesh(0.25), medium=ring_medium(), k2=5.0)
        return multiplier_scan(problem, (0.8, 1.25), (3, 8))

    def test_shape_and_rows(self, scan):
        """The scan covers the full polar grid."""
        assert scan.values.shape == (3, 8)
        assert len(scan.rows()) == 24
        np.testing.assert_allclose(scan.radii, [0.8, 1.0, 1.25])

    def test_conjugate_symmetry(self, scan):
        """Values at theta and -theta agree for a real medium."""
        np.testing.assert_allclose(scan.values, scan.values[:, ::-1], rtol=1e-8)

    def test_inverse_symmetry(self, scan):
        """Values at z and 1/z agree within a factor 10."""
        ratio = scan.values[0, :] / scan.values[2, ::-1]
        assert np.all((ratio > 0.1) & (ratio < 10.0))

    def test_rejects_bad_ranges(self):
        """The radial range must straddle 1."""
        problem = CellProblem(mesh=build_structured_mesh(0.25), medium=ring_medium(), k2=5.0)
        with pytest.raises(InvalidParameterError):
            multiplier_scan(problem, (1.1, 1.5), (3, 8))
