"""Tests for contour construction and validation."""

import dataclasses
import math

import pytest

from waveguide.cell_solver import CellProblem
from waveguide.contour import (
    Arc,
    DeltaPolicy,
    Detour,
    DetourSide,
    build_contour,
    unit_circle,
    validate_contour,
    winding_number,
)
from waveguide.dispersion import Crossing, CrossingClass
from waveguide.errors import InvalidParameterError
from waveguide.medium import MediumSpec
from waveguide.mesh import build_structured_mesh

ROOT5 = math.sqrt(5.0)


def crossing(alpha: float, crossing_class: CrossingClass) -> Crossing:
    slope = 2.0 * alpha if crossing_class is not CrossingClass.SUS else 0.0
    return Crossing(alpha=alpha, band=0, slope=slope, crossing_class=crossing_class)


@pytest.fixture
def homogeneous_crossings():
    return [crossing(ROOT5, CrossingClass.RUS), crossing(-ROOT5, CrossingClass.LUS)]


class TestBuildContour:
    """Tests for build_contour."""

    def test_no_crossings_gives_unit_circle(self):
        """Without multipliers on the circle the contour is S^1."""
        contour = build_contour([])
        assert contour.is_unit_circle
        assert contour.segments[0].interval == (-math.pi, math.pi)

    def test_segment_order(self, homogeneous_crossings):
        """Detours and arcs alternate, starting with the leftmost crossing."""
        contour = build_contour(homogeneous_crossings)
        kinds = [type(s) for s in contour.segments]
        assert kinds == [Detour, Arc, Detour, Arc]
        assert contour.segments[0].alpha == pytest.approx(-ROOT5)
        assert contour.segments[0].side is DetourSide.INWARD
        assert contour.segments[2].side is DetourSide.OUTWARD

    def test_arc_endpoints(self, homogeneous_crossings):
        """Arcs start and stop at alpha +- acos(1 - delta^2/2)."""
        contour = build_contour(homogeneous_crossings, DeltaPolicy(delta=0.1))
        beta = math.acos(1.0 - 0.1**2 / 2.0)
        assert beta == pytest.approx(0.1000417, abs=1e-7)
        first_arc, last_arc = contour.segments[1], contour.segments[3]
        assert first_arc.interval[0] == pytest.approx(-ROOT5 + beta, abs=1e-12)
        assert first_arc.interval[1] == pytest.approx(ROOT5 - beta, abs=1e-12)
        assert last_arc.interval[0] == pytest.approx(ROOT5 + beta, abs=1e-12)
        assert last_arc.interval[1] == pytest.approx(2.0 * math.pi - ROOT5 - beta, abs=1e-12)

    def test_detour_angle_range(self, homogeneous_crossings):
        """Outward detours span 2 gamma, inward ones the complementary 2 pi - 2 gamma."""
        contour = build_contour(homogeneous_crossings, DeltaPolicy(delta=0.1))
        gamma = math.acos(-0.05)
        for segment in contour.segments[::2]:
            low, high = segment.interval
            expected = 2.0 * gamma if segment.side is DetourSide.OUTWARD else 2.0 * (math.pi - gamma)
            assert high - low == pytest.approx(expected)
            assert abs(segment.point(low)) == pytest.approx(1.0, abs=1e-12)
            assert abs(segment.point(high)) == pytest.approx(1.0, abs=1e-12)

    def test_radius_shrinks_near_branch_cut(self):
        """A crossing close to -1 gets a ball that stays off the negative axis."""
        contour = build_contour(
            [crossing(3.0, CrossingClass.RUS), crossing(-3.0, CrossingClass.LUS)],
            DeltaPolicy(delta=0.1, margin=0.4),
        )
        detour = contour.segments[0]
        assert detour.delta == pytest.approx(0.4 * math.sin(3.0))
        assert validate_contour(contour).passed

    def test_radius_shrinks_for_close_crossings(self):
        """Neighbouring crossings limit the radius to margin times the chord."""
        contour = build_contour(
            [crossing(0.5, CrossingClass.RUS), crossing(0.6, CrossingClass.LUS)],
            DeltaPolicy(delta=0.1, margin=0.4),
        )
        chord = 2.0 * math.sin(0.05)
        assert contour.segments[0].delta == pytest.approx(0.4 * chord)

    def test_stationary_crossing_rejected(self):
        """A zero-slope crossing cannot be detoured."""
        with pytest.raises(InvalidParameterError):
            build_contour([crossing(1.0, CrossingClass.SUS)])

    def test_repeated_angles_rejected(self):
        """Two crossings at the same angle are rejected."""
        with pytest.raises(InvalidParameterError):
            build_contour([crossing(1.0, CrossingClass.RUS), crossing(1.0, CrossingClass.RUS)])

    def test_probing_with_problem(self, homogeneous_crossings):
        """Each ball holds only its own multiplier for q = 1, k^2 = 5."""
        problem = CellProblem(build_structured_mesh(0.125), MediumSpec.homogeneous(), 5.0)
        contour = build_contour(homogeneous_crossings, DeltaPolicy(), problem)
        assert len(contour.segments) == 4


class TestValidateContour:
    """Tests for validate_contour."""

    def test_unit_circle_passes(self):
        """S^1 winds once around the origin."""
        contour = unit_circle()
        report = validate_contour(contour)
        assert report.passed
        assert winding_number(contour) == pytest.approx(1.0, abs=1e-9)

    def test_detoured_contour_passes(self, homogeneous_crossings):
        """A freshly built contour passes every geometric check."""
        contour = build_contour(homogeneous_crossings)
        report = validate_contour(contour)
        assert report.passed
        assert {c.name for c in report.checks} >= {"closure", "winding", "sides", "ordering"}
        assert winding_number(contour) == pytest.approx(1.0, abs=1e-9)

    def test_wrong_side_detected(self, homogeneous_crossings):
        """Relabelling an outward detour as inward fails the side check."""
        contour = build_contour(homogeneous_crossings)
        segments = list(contour.segments)
        segments[2] = dataclasses.replace(segments[2], side=DetourSide.INWARD)
        broken = dataclasses.replace(contour, segments=tuple(segments))
        report = validate_contour(broken)
        assert not report.passed
        assert not report.check("sides").passed

    def test_indicator_floor_with_problem(self, homogeneous_crossings):
        """Indicator samples along the contour stay above the pole threshold."""
        problem = CellProblem(build_structured_mesh(0.125), MediumSpec.homogeneous(), 5.0)
        report = validate_contour(build_contour(homogeneous_crossings), problem, n_samples=40)
        assert report.check("indicator_floor").passed

    def test_report_rows(self):
        """Every check yields one CSV row."""
        report = validate_contour(unit_circle())
        rows = report.rows()
        assert len(rows) == len(report.checks)
        assert all(row[1] == "pass" for row in rows)

    def test_sample_is_closed_loop(self, homogeneous_crossings):
        """Samples run through every segment in order."""
        contour = build_contour(homogeneous_crossings)
        samples = contour.sample(16)
        assert len(samples) == 64
        assert [s for _, s in samples[::16]] == [0, 1, 2, 3]
        assert abs(samples[-1][0] - samples[0][0]) < 1e-9
