"""Tests for the full-guide contour solver."""

import math

import numpy as np
import pytest

from shared import CellRange
from waveguide.cell_solver import CellProblem, solve_cell
from waveguide.contour import build_contour, unit_circle
from waveguide.dispersion import Crossing, CrossingClass
from waveguide.fullguide import (
    SolveConfig,
    compare_on_mesh,
    contour_nodes,
    resolve_contour,
    solve_full,
    solve_full_batch,
)
from waveguide.errors import InvalidParameterError
from waveguide.medium import MediumSpec, SourceSpec, ring_medium, ring_source
from waveguide.mesh import build_structured_mesh
from waveguide.oracle import inverse_bloch_transform


@pytest.fixture(scope="module")
def absorbing_problem():
    return CellProblem(build_structured_mesh(0.125), MediumSpec.homogeneous(), 5.0, 2.0)


@pytest.fixture(scope="module")
def circle_config():
    return SolveConfig(n_nodes=32, contour=unit_circle(), cells=CellRange(n_min=-1, n_max=3))


@pytest.fixture(scope="module")
def ring_solution(absorbing_problem, circle_config):
    return solve_full(absorbing_problem, ring_source(), circle_config)


class TestContourNodes:
    """Tests for the quadrature nodes and their coefficients."""

    def test_unit_circle_weights(self):
        """On S^1 the coefficients integrate 1/z and z exactly."""
        nodes = contour_nodes(unit_circle(), 32, 6)
        assert len(nodes) == 32
        assert sum(node.coefficient for node in nodes) == pytest.approx(1.0, abs=1e-12)
        assert abs(sum(node.coefficient * node.z for node in nodes)) < 1e-12

    def test_detoured_contour_encloses_origin_once(self):
        """The detoured contour still integrates dz/(2 pi i z) to 1."""
        root5 = math.sqrt(5.0)
        contour = build_contour(
            [
                Crossing(root5, 0, 2 * root5, CrossingClass.RUS),
                Crossing(-root5, 0, -2 * root5, CrossingClass.LUS),
            ]
        )
        nodes = contour_nodes(contour, 64, 6)
        assert len(nodes) == 4 * 64
        assert sum(node.coefficient for node in nodes) == pytest.approx(1.0, abs=1e-6)

    def test_log_branch_follows_segment(self):
        """Arc nodes carry log z = i t, ending at t = pi."""
        nodes = contour_nodes(unit_circle(), 8, 6)
        assert nodes[-1].log_z == pytest.approx(complex(0.0, math.pi))
        assert nodes[0].log_z == pytest.approx(complex(0.0, -0.75 * math.pi))
        for node in nodes:
            assert np.exp(node.log_z) == pytest.approx(node.z)


class TestSolveFull:
    """Tests for solve_full on an absorbing homogeneous guide."""

    def test_zero_source(self, absorbing_problem, circle_config):
        """f = 0 gives u = 0 on every cell."""
        solution = solve_full(absorbing_problem, SourceSpec.zero(), circle_config)
        for n in range(-1, 4):
            assert not np.any(solution.cell(n))

    def test_cells_and_trace(self, ring_solution, absorbing_problem):
        """The solution covers the configured cells; the trace has n + 1 values."""
        assert sorted(ring_solution.cells) == [-1, 0, 1, 2, 3]
        assert ring_solution.trace(0).shape == (absorbing_problem.mesh.n + 1,)
        with pytest.raises(InvalidParameterError):
            ring_solution.cell(7)

    def test_decay_away_from_source(self, ring_solution):
        """With absorption the field decays cell by cell."""
        norms = ring_solution.norms()
        assert norms[1] > norms[2] > norms[3] > 0.0

    def test_linearity(self, absorbing_problem, circle_config):
        """Scaling the source scales the field."""
        source = ring_source()
        single, scaled = solve_full_batch(
            absorbing_problem, [source, source.scaled(2j)], circle_config
        )
        for n in single.cells:
            scale = np.abs(single.cell(n)).max()
            np.testing.assert_allclose(scaled.cell(n), 2j * single.cell(n), atol=1e-12 * scale)

    def test_batch_matches_single(self, absorbing_problem, circle_config, ring_solution):
        """A batch entry equals the single-source solve exactly."""
        batch = solve_full_batch(
            absorbing_problem,
            [SourceSpec.from_expression("x2"), ring_source()],
            circle_config,
        )
        for n in ring_solution.cells:
            np.testing.assert_array_equal(batch[1].cell(n), ring_solution.cell(n))

    def test_matches_inverse_transform_of_cell_solves(self, absorbing_problem, ring_solution):
        """On S^1 the solver is the inverse Bloch transform of the cell fields."""
        source = ring_source()

        def transform(z: complex) -> np.ndarray:
            log_z = complex(0.0, math.atan2(z.imag, z.real))
            return solve_cell(absorbing_problem, z, source, log_z=log_z).w_values()

        for n in (0, 2):
            expected = inverse_bloch_transform(transform, n, 32)
            scale = np.abs(expected).max()
            np.testing.assert_allclose(ring_solution.cell(n), expected, atol=1e-10 * scale)

    def test_metadata(self, ring_solution):
        """Metadata records the solve parameters."""
        metadata = ring_solution.metadata
        assert metadata["N"] == 32
        assert metadata["segments"] == 1
        assert metadata["cell_solves"] == 32
        assert metadata["source"] == "builtin-ring"

    def test_rows_shift_x1_by_cell(self, ring_solution, absorbing_problem):
        """CSV rows report global x1 = x1 + n."""
        rows = ring_solution.rows()
        assert len(rows) == 5 * absorbing_problem.mesh.n_vertices
        last = rows[-1]
        assert last[0] == 3
        assert 2.5 <= last[1] <= 3.5


class TestResolveContour:
    """Tests for the automatic contour."""

    def test_explicit_contour_wins(self, absorbing_problem, circle_config):
        """An explicit contour is used as given."""
        assert resolve_contour(absorbing_problem, circle_config) is circle_config.contour

    def test_built_from_dispersion(self):
        """q = 1, k^2 = 5 gets detours at +-sqrt(5)."""
        problem = CellProblem(build_structured_mesh(0.125), MediumSpec.homogeneous(), 5.0)
        config = SolveConfig(dispersion_h=0.125, dispersion_n_alpha=16, dispersion_n_bands=4)
        contour = resolve_contour(problem, config)
        assert len(contour.segments) == 4
        assert sorted(c.alpha for c in contour.crossings) == pytest.approx(
            [-math.sqrt(5.0), math.sqrt(5.0)], abs=1e-8
        )

    def test_lap_solution_without_absorption(self):
        """Without absorption the LAP field on cell 0 is finite and nonzero."""
        problem = CellProblem(build_structured_mesh(0.125), MediumSpec.homogeneous(), 5.0)
        config = SolveConfig(
            n_nodes=16, dispersion_h=0.125, dispersion_n_alpha=16, dispersion_n_bands=4
        )
        solution = solve_full(problem, ring_source(), config)
        values = solution.cell(0)
        assert np.all(np.isfinite(values))
        assert solution.norm(0) > 0.0


class TestCompareOnMesh:
    """Tests for compare_on_mesh."""

    def test_self_comparison_is_zero(self, ring_solution):
        """A solution compared with itself has zero error."""
        assert compare_on_mesh(ring_solution, ring_solution, 0) == 0.0

    def test_nested_mesh_comparison(self, ring_solution):
        """Interpolating onto a finer nested mesh gives a moderate error."""
        problem = CellProblem(build_structured_mesh(0.0625), MediumSpec.homogeneous(), 5.0, 2.0)
        config = SolveConfig(n_nodes=32, contour=unit_circle())
        fine = solve_full(problem, ring_source(), config)
        error = compare_on_mesh(ring_solution, fine, 0)
        assert 0.0 < error < 0.5


def _errors_against(reference, solutions):
    return {key: compare_on_mesh(solution, reference) for key, solution in solutions.items()}


@pytest.mark.slow
class TestRingConvergenceStopBand:
    """Ring medium at k^2 = 5: errors in N and h on the unit circle."""

    N_VALUES = (8, 16, 32, 64)
    H_VALUES = (0.04, 0.02)

    @pytest.fixture(scope="class")
    def runs(self):
        problems = {
            h: CellProblem(build_structured_mesh(h), ring_medium(), 5.0)
            for h in (0.005, *self.H_VALUES)
        }

        def solve(h, n_nodes):
            config = SolveConfig(n_nodes=n_nodes, contour=unit_circle(), threads=4)
            return solve_full(problems[h], ring_source(), config)

        reference = solve(0.005, 64)
        solutions = {(h, n): solve(h, n) for h in self.H_VALUES for n in self.N_VALUES}
        return reference, solutions

    def test_errors_plateau_in_n(self, runs):
        """At each h the error stops changing once N >= 32."""
        reference, solutions = runs
        errors = _errors_against(reference, solutions)
        for h in self.H_VALUES:
            assert errors[h, 16] <= errors[h, 8] * (1.0 + 1e-3)
            assert abs(errors[h, 32] - errors[h, 64]) <= 0.05 * errors[h, 64]

    def test_plateau_drops_at_second_order(self, runs):
        """Halving h divides the plateau error by about four."""
        reference, solutions = runs
        errors = _errors_against(reference, solutions)
        ratio = errors[0.04, 64] / errors[0.02, 64]
        assert 3.0 < ratio < 5.5

    def test_self_convergence_in_n(self, runs):
        """On a fixed mesh the quadrature error against N = 64 falls quickly with N."""
        _, solutions = runs
        for h in self.H_VALUES:
            finest = solutions[h, 64]
            errors = [compare_on_mesh(solutions[h, n], finest) for n in (8, 16, 32)]
            assert errors[1] < 0.5 * errors[0]
            assert errors[2] < max(0.5 * errors[1], 1e-10)
            assert errors[2] < 1e-4


@pytest.mark.slow
class TestRingConvergencePassBand:
    """Ring medium at k^2 = 17 on the detoured contour."""

    N_VALUES = (16, 32, 64)
    H_VALUES = (0.04, 0.02)

    @pytest.fixture(scope="class")
    def runs(self):
        reference_problem = CellProblem(build_structured_mesh(0.01), ring_medium(), 17.0)
        contour = resolve_contour(reference_problem, SolveConfig(threads=4))
        assert len(contour.segments) == 4

        def solve(problem, n_nodes):
            config = SolveConfig(n_nodes=n_nodes, contour=contour, threads=4)
            return solve_full(problem, ring_source(), config)

        reference = solve(reference_problem, 64)
        solutions = {}
        for h in self.H_VALUES:
            problem = CellProblem(build_structured_mesh(h), ring_medium(), 17.0)
            solutions.update({(h, n): solve(problem, n) for n in self.N_VALUES})
        return reference, solutions

    def test_errors_stabilize_in_n(self, runs):
        """The graded rule has converged by N = 32 at both mesh widths."""
        reference, solutions = runs
        errors = _errors_against(reference, solutions)
        for h in self.H_VALUES:
            assert abs(errors[h, 32] - errors[h, 64]) <= 0.1 * errors[h, 64]

    def test_errors_decrease_with_h(self, runs):
        """The finer mesh is closer to the reference."""
        reference, solutions = runs
        errors = _errors_against(reference, solutions)
        assert errors[0.02, 64] < 0.5 * errors[0.04, 64]
