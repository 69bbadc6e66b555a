"""Tests for the half-guide source recovery."""

import numpy as np
import pytest

from shared import CellRange
from waveguide.assembly import relative_l2_error
from waveguide.cell_solver import CellProblem
from waveguide.contour import unit_circle
from waveguide.errors import InvalidParameterError
from waveguide.fullguide import SolveConfig, resolve_contour, solve_full
from waveguide.halfguide import (
    OperatorMatrix,
    SourceBasis,
    TraceVector,
    apply_A,
    build_operator_matrix,
    solve_half,
    tikhonov_solve,
    trace_mass_matrix,
)
from waveguide.medium import MediumSpec, combine_sources, ring_medium, ring_source
from waveguide.mesh import build_structured_mesh


def identity_trace(values: list[complex]) -> TraceVector:
    size = len(values)
    return TraceVector(np.asarray(values, dtype=complex), np.linspace(0.0, 1.0, size), np.eye(size))


@pytest.fixture(scope="module")
def problem():
    return CellProblem(build_structured_mesh(0.125), MediumSpec.homogeneous(), 5.0, 2.0)


@pytest.fixture(scope="module")
def config():
    return SolveConfig(n_nodes=32, contour=unit_circle(), cells=CellRange(n_min=0, n_max=2))


class TestTraceVector:
    """Tests for Gamma_1 traces."""

    def test_mass_matrix_integrates_constants(self):
        """The trace mass matrix sums to the edge length."""
        mesh = build_structured_mesh(0.125)
        assert trace_mass_matrix(mesh).sum() == pytest.approx(1.0)

    def test_norm_of_constant(self):
        """A constant trace of value 1 has unit L2 norm."""
        mesh = build_structured_mesh(0.125)
        trace = TraceVector.on_mesh(mesh, np.ones(mesh.n + 1))
        assert trace.norm() == pytest.approx(1.0)

    def test_from_samples_interpolates(self):
        """Sampled data is interpolated linearly onto the edge nodes."""
        mesh = build_structured_mesh(0.125)
        trace = TraceVector.from_samples(
            mesh, np.array([0.0, 1.0]), np.array([0.0, 1.0 + 1.0j])
        )
        np.testing.assert_allclose(trace.values, trace.x2 * (1.0 + 1.0j))

    def test_from_samples_rejects_unsorted(self):
        """Heights must strictly increase."""
        mesh = build_structured_mesh(0.125)
        with pytest.raises(InvalidParameterError):
            TraceVector.from_samples(mesh, np.array([0.5, 0.5]), np.array([1.0, 2.0], dtype=complex))

    def test_rejects_non_finite(self):
        """NaN data is rejected."""
        with pytest.raises(InvalidParameterError):
            identity_trace([1.0, float("nan")])


class TestSourceBasis:
    """Tests for SourceBasis."""

    def test_modes_row_major(self):
        """Modes run over r fastest."""
        basis = SourceBasis(2, 3)
        assert basis.size == 6
        assert basis.modes() == [(1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)]

    def test_support_inside_cell(self):
        """Basis functions vanish for |x1| >= 0.45."""
        source = SourceBasis(2, 2).sources()[3]
        x1 = np.array([-0.5, -0.45, 0.45, 0.5, 0.1])
        values = source.evaluate(x1, np.full(5, 0.3))
        np.testing.assert_array_equal(values[:4], 0.0)
        assert values[4] != 0.0

    def test_resolution_limit(self):
        """Frequencies above n/4 are rejected."""
        with pytest.raises(InvalidParameterError):
            SourceBasis(5, 1).check_resolution(build_structured_mesh(0.125))
        SourceBasis(2, 3).check_resolution(build_structured_mesh(0.125))

    def test_empty_basis_rejected(self):
        """P1 and R1 must be positive."""
        with pytest.raises(InvalidParameterError):
            SourceBasis(0, 2)


class TestTikhonov:
    """Tests for the regularized least-squares solve."""

    def test_identity_operator(self):
        """For Phi = I the solution is phi / (1 + alpha)."""
        operator = OperatorMatrix(matrix=np.eye(3, dtype=complex), weight=np.eye(3))
        result = tikhonov_solve(operator, identity_trace([1.0, 0.0, 0.0]), 1.0)
        np.testing.assert_allclose(result.coefficients, [0.5, 0.0, 0.0], atol=1e-14)
        assert result.residual_norm == pytest.approx(0.5)

    def test_monotone_in_alpha(self):
        """Larger alpha trades a larger residual for a smaller solution."""
        rng = np.random.default_rng(7)
        matrix = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        operator = OperatorMatrix(matrix=matrix, weight=np.eye(5))
        data = identity_trace(list(rng.standard_normal(5) + 1j * rng.standard_normal(5)))
        results = [tikhonov_solve(operator, data, alpha) for alpha in (1e-4, 1e-2, 1.0, 100.0)]
        residuals = [r.residual_norm for r in results]
        norms = [r.solution_norm for r in results]
        assert all(b >= a - 1e-12 for a, b in zip(residuals, residuals[1:]))
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))

    def test_matches_normal_equations(self):
        """The SVD filter solves (Phi^H W Phi + alpha I) c = Phi^H W phi."""
        rng = np.random.default_rng(3)
        matrix = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        weight = np.diag(np.linspace(0.5, 2.0, 6))
        operator = OperatorMatrix(matrix=matrix, weight=weight)
        data = TraceVector(
            rng.standard_normal(6) + 0j, np.linspace(0.0, 1.0, 6), weight
        )
        alpha = 0.3
        result = tikhonov_solve(operator, data, alpha)
        normal = matrix.conj().T @ weight @ matrix + alpha * np.eye(4)
        expected = np.linalg.solve(normal, matrix.conj().T @ weight @ data.values)
        np.testing.assert_allclose(result.coefficients, expected, atol=1e-12)

    def test_zero_data(self):
        """Zero data gives zero coefficients."""
        operator = OperatorMatrix(matrix=np.eye(3, dtype=complex), weight=np.eye(3))
        result = tikhonov_solve(operator, identity_trace([0.0, 0.0, 0.0]), 1e-6)
        assert not np.any(result.coefficients)

    @pytest.mark.parametrize("alpha", [0.0, -1e-6])
    def test_rejects_nonpositive_alpha(self, alpha):
        """alpha must be positive."""
        operator = OperatorMatrix(matrix=np.eye(2, dtype=complex), weight=np.eye(2))
        with pytest.raises(InvalidParameterError):
            tikhonov_solve(operator, identity_trace([1.0, 1.0]), alpha)


class TestSolveHalf:
    """Tests for solve_half on an absorbing homogeneous guide."""

    @pytest.fixture(scope="class")
    def manufactured(self, problem, config):
        basis = SourceBasis(2, 2)
        truth = [1.0, 0.5, -0.3, 0.2j]
        source = combine_sources(truth, basis.sources())
        reference = solve_full(problem, source, config)
        data = TraceVector.from_solution(reference, 0)
        result = solve_half(problem, data, basis, [1e-12, 1e-10, 1e-8], config)
        return reference, data, result

    def test_operator_columns_are_traces(self, problem, config):
        """Each operator column is A applied to one basis function."""
        basis = SourceBasis(1, 2)
        operator = build_operator_matrix(problem, basis, config)
        assert operator.shape == (problem.mesh.n + 1, 2)
        column = apply_A(problem, basis.sources()[1], config)
        np.testing.assert_allclose(operator.matrix[:, 1], column.values, rtol=1e-12, atol=1e-14)

    def test_reproduces_boundary_data(self, manufactured):
        """The recovered field matches the data on Gamma_1."""
        _, _, result = manufactured
        assert result.gamma1_mismatch < 1e-4
        assert len(result.sweep) == 3

    def test_recovers_field_beyond_gamma1(self, manufactured, problem):
        """Cells n >= 1 agree with the field that produced the data."""
        reference, _, result = manufactured
        assert sorted(result.solution.cells) == [1, 2]
        for n in (1, 2):
            error = np.linalg.norm(result.solution.cell(n) - reference.cell(n))
            assert error < 1e-2 * np.linalg.norm(reference.cell(n))

    def test_sweep_residual_monotone_in_alpha(self, manufactured):
        """Larger alpha never lowers the residual and never grows the coefficients."""
        _, _, result = manufactured
        alphas, mismatches, norms = (np.array(column) for column in zip(*result.sweep, strict=True))
        assert np.all(np.diff(alphas) > 0.0)
        assert np.all(np.diff(mismatches) >= -1e-9 * mismatches.max())
        assert np.all(np.diff(norms) <= 1e-9 * norms.max())

    def test_metadata(self, manufactured):
        """The chosen alpha and basis size are recorded."""
        _, _, result = manufactured
        assert result.solution.metadata["M0"] == 4
        assert result.solution.metadata["alpha_chosen"] == result.alpha
        assert result.alpha in (1e-12, 1e-10, 1e-8)

    def test_zero_data(self, problem, config):
        """Zero boundary data yields the zero field."""
        data = TraceVector.on_mesh(problem.mesh, np.zeros(problem.mesh.n + 1))
        result = solve_half(problem, data, SourceBasis(1, 1), [1e-8], config)
        assert not np.any(result.coefficients)
        assert not np.any(result.solution.cell(1))

    def test_rejects_cell_range_without_half_guide(self, problem):
        """The output range must contain n >= 1."""
        data = TraceVector.on_mesh(problem.mesh, np.ones(problem.mesh.n + 1))
        config = SolveConfig(n_nodes=16, contour=unit_circle())
        with pytest.raises(InvalidParameterError):
            solve_half(problem, data, SourceBasis(1, 1), [1e-8], config)

    def test_rejects_mismatched_data(self, problem, config):
        """Data must live on the mesh's Gamma_1 nodes."""
        with pytest.raises(InvalidParameterError):
            solve_half(problem, identity_trace([1.0, 2.0]), SourceBasis(1, 1), [1e-8], config)


@pytest.mark.slow
class TestSolveHalfRing:
    """Half-guide recovery for the ring medium at a propagating k^2 without absorption."""

    ALPHAS = [1e-10, 1e-8, 1e-6, 1e-4, 1e-2]

    @pytest.fixture(scope="class")
    def ring_case(self):
        problem = CellProblem(build_structured_mesh(0.025), ring_medium(), 17.0)
        base = SolveConfig(
            n_nodes=32, cells=CellRange(n_min=0, n_max=3), dispersion_h=0.05, threads=4
        )
        config = base.model_copy(update={"contour": resolve_contour(problem, base)})
        reference = solve_full(problem, ring_source(), config)
        data = TraceVector.from_solution(reference, 0)
        result = solve_half(problem, data, SourceBasis(4, 10), self.ALPHAS, config)
        return problem, reference, result

    def test_contour_is_deformed(self, ring_case):
        """k^2 = 17 is in a pass band, so the LAP contour carries two detours."""
        _, reference, _ = ring_case
        assert reference.metadata["segments"] == 4

    def test_gamma1_mismatch(self, ring_case):
        """The recovered source reproduces the data on Gamma_1 to 1e-2."""
        _, _, result = ring_case
        assert result.gamma1_mismatch <= 1e-2

    def test_field_on_first_three_cells(self, ring_case):
        """The half-guide field matches the full-guide field that produced the data."""
        problem, reference, result = ring_case
        assert sorted(result.solution.cells) == [1, 2, 3]
        for n in (1, 2, 3):
            error = relative_l2_error(problem.mesh, result.solution.cell(n), reference.cell(n))
            assert error < 5e-2

    def test_sweep_residual_monotone(self, ring_case):
        """The Tikhonov residual grows with alpha across the sweep."""
        _, _, result = ring_case
        mismatches = np.array([mismatch for _, mismatch, _ in result.sweep])
        assert [alpha for alpha, _, _ in result.sweep] == self.ALPHAS
        assert np.all(np.diff(mismatches) >= -1e-9 * mismatches.max())
