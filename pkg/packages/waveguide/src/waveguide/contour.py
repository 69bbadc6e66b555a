"""Integration contours: the unit circle with circular detours.

Around every right-going multiplier e^{i alpha_j} the contour bulges outward
along a circle of radius delta_j; around every left-going one it dips inward.
Segments are listed in traversal order D_1, C_1, ..., D_2P, C_2P, where D_j is
the detour at the j-th crossing (sorted by angle) and C_j the arc to the next
detour. The last arc wraps through -1 and carries the parameter past pi.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from pydantic import Field

from shared import BaseConfigModel, get_logger

from .cell_solver import CellProblem, DEFAULT_POLE_THRESHOLD, principal_log, singularity_indicator
from .dispersion import Crossing, CrossingClass
from .errors import ContourConstructionError, InvalidParameterError

logger = get_logger("contour")

ENDPOINT_TOL = 1e-10
BALL_SAMPLE_ANGLES = 8
BALL_DIP_RATIO = 1e-2


class DetourSide(str, Enum):
    OUTWARD = "outward"
    INWARD = "inward"


class DeltaPolicy(BaseConfigModel):
    """Detour radius and the fraction of the free space a detour may use."""

    delta: float = Field(default=0.1, gt=0.0, lt=1.0)
    margin: float = Field(default=0.4, gt=0.0, lt=1.0)


@dataclass(frozen=True)
class Arc:
    """z = e^{it} for t in [alpha_from, alpha_to]; log z = i t."""

    alpha_from: float
    alpha_to: float

    @property
    def interval(self) -> tuple[float, float]:
        return self.alpha_from, self.alpha_to

    @property
    def orientation(self) -> int:
        return 1

    @property
    def is_full_circle(self) -> bool:
        return abs(self.alpha_to - self.alpha_from - 2.0 * math.pi) < ENDPOINT_TOL

    def point(self, t: float) -> complex:
        return complex(math.cos(t), math.sin(t))

    def derivative(self, t: float) -> complex:
        return 1j * self.point(t)

    def log(self, t: float) -> complex:
        return complex(0.0, t)

    def describe(self) -> str:
        return f"arc[{self.alpha_from:.12g}, {self.alpha_to:.12g}]"


@dataclass(frozen=True)
class Detour:
    """
    z = e^{i alpha} + delta e^{i theta} for theta in [theta_from, theta_to].

    Outward detours run with increasing theta, inward detours with decreasing
    theta, so that the closed contour is traversed counterclockwise.
    """

    alpha: float
    delta: float
    theta_from: float
    theta_to: float
    side: DetourSide

    @property
    def interval(self) -> tuple[float, float]:
        return self.theta_from, self.theta_to

    @property
    def orientation(self) -> int:
        return 1 if self.side is DetourSide.OUTWARD else -1

    @property
    def center(self) -> complex:
        return complex(math.cos(self.alpha), math.sin(self.alpha))

    def point(self, t: float) -> complex:
        return self.center + self.delta * complex(math.cos(t), math.sin(t))

    def derivative(self, t: float) -> complex:
        return 1j * self.delta * complex(math.cos(t), math.sin(t))

    def log(self, t: float) -> complex:
        return principal_log(self.point(t))

    def describe(self) -> str:
        return (
            f"detour[{self.side.value}, alpha={self.alpha:.12g}, delta={self.delta:.6g}, "
            f"theta=({self.theta_from:.12g}, {self.theta_to:.12g})]"
        )


Segment = Arc | Detour


def _start(segment: Segment) -> complex:
    a, b = segment.interval
    return segment.point(a if segment.orientation > 0 else b)


def _end(segment: Segment) -> complex:
    a, b = segment.interval
    return segment.point(b if segment.orientation > 0 else a)


@dataclass(frozen=True)
class Contour:
    """Closed, counterclockwise sequence of arcs and detours."""

    segments: tuple[Segment, ...]
    crossings: tuple[Crossing, ...] = ()

    @property
    def is_unit_circle(self) -> bool:
        return len(self.segments) == 1 and isinstance(self.segments[0], Arc)

    def describe(self) -> str:
        return "; ".join(segment.describe() for segment in self.segments)

    def sample(self, points_per_segment: int = 64) -> list[tuple[complex, int]]:
        """Points along the contour in traversal order, tagged with segment index."""
        samples: list[tuple[complex, int]] = []
        for index, segment in enumerate(self.segments):
            a, b = segment.interval
            ts = np.linspace(a, b, points_per_segment)
            if segment.orientation < 0:
                ts = ts[::-1]
            samples.extend((segment.point(float(t)), index) for t in ts)
        return samples


def unit_circle() -> Contour:
    return Contour(segments=(Arc(-math.pi, math.pi),))


def _detour_radius(alpha: float, neighbours: Sequence[float], policy: DeltaPolicy) -> float:
    center = complex(math.cos(alpha), math.sin(alpha))
    radius = policy.delta
    for other in neighbours:
        chord = abs(center - complex(math.cos(other), math.sin(other)))
        radius = min(radius, policy.margin * chord)
    # Keep the ball off the branch cut (-inf, 0]
    if center.real < 0.0:
        radius = min(radius, policy.margin * abs(center.imag))
    return radius


def _detour(crossing: Crossing, delta: float) -> Detour:
    alpha = crossing.alpha
    gamma = math.acos(-delta / 2.0)
    outward = crossing.crossing_class is CrossingClass.RUS
    side = DetourSide.OUTWARD if outward else DetourSide.INWARD
    candidates = [(alpha - gamma, alpha + gamma), (alpha + gamma, alpha - gamma + 2.0 * math.pi)]
    for theta_from, theta_to in candidates:
        midpoint = complex(math.cos(alpha), math.sin(alpha)) + delta * complex(
            math.cos(0.5 * (theta_from + theta_to)), math.sin(0.5 * (theta_from + theta_to))
        )
        if (abs(midpoint) > 1.0) == outward:
            return Detour(alpha, delta, theta_from, theta_to, side)
    raise ContourConstructionError(f"no theta branch satisfies the side condition at alpha={alpha:.12g}")


def _check_ball_for_second_pole(problem: CellProblem, detour: Detour, threshold: float) -> None:
    angles = 2.0 * math.pi * np.arange(BALL_SAMPLE_ANGLES) / BALL_SAMPLE_ANGLES
    boundary = [
        singularity_indicator(problem, detour.center + detour.delta * complex(math.cos(a), math.sin(a)))
        for a in angles
    ]
    inner = [
        singularity_indicator(problem, detour.center + 0.5 * detour.delta * complex(math.cos(a), math.sin(a)))
        for a in angles
    ]
    reference = float(np.median(boundary))
    if min(inner) < max(threshold, BALL_DIP_RATIO * reference):
        raise ContourConstructionError(
            f"detour ball at alpha={detour.alpha:.12g} contains a second indicator dip "
            f"(sample {min(inner):.3e} vs boundary median {reference:.3e})"
        )


def build_contour(
    crossings: Sequence[Crossing],
    delta_policy: DeltaPolicy | None = None,
    problem: CellProblem | None = None,
    pole_threshold: float = DEFAULT_POLE_THRESHOLD,
) -> Contour:
    """
    Build the deformed unit circle for a set of crossings.

    Args:
        crossings: Right- and left-going crossings at distinct angles
        delta_policy: Default radius and margin factor
        problem: If given, every detour ball is sampled for a second multiplier

    Raises:
        ContourConstructionError: On overlapping balls, empty arcs, a ball
            touching the branch cut, or a sampled second multiplier
        InvalidParameterError: On stationary or repeated crossings
    """
    policy = delta_policy or DeltaPolicy()
    if not crossings:
        return unit_circle()
    ordered = sorted(crossings, key=lambda c: c.alpha)
    for crossing in ordered:
        if crossing.crossing_class is CrossingClass.SUS:
            raise InvalidParameterError(f"stationary crossing at alpha={crossing.alpha:.12g}")
    angles = [c.alpha for c in ordered]
    if len(set(angles)) != len(angles):
        raise InvalidParameterError("crossing angles must be pairwise distinct")

    detours: list[Detour] = []
    for index, crossing in enumerate(ordered):
        neighbours = angles[:index] + angles[index + 1 :]
        delta = _detour_radius(crossing.alpha, neighbours, policy)
        if delta <= 0.0:
            raise ContourConstructionError(f"no room for a detour at alpha={crossing.alpha:.12g}")
        detours.append(_detour(crossing, delta))

    for first, second in zip(detours, detours[1:] + detours[:1], strict=True):
        if first is second:
            continue
        if abs(first.center - second.center) <= first.delta + second.delta:
            raise ContourConstructionError(
                f"detour balls at alpha={first.alpha:.12g} and {second.alpha:.12g} overlap"
            )

    half_widths = [math.acos(1.0 - d.delta**2 / 2.0) for d in detours]
    lower = [d.alpha - w for d, w in zip(detours, half_widths, strict=True)]
    upper = [d.alpha + w for d, w in zip(detours, half_widths, strict=True)]
    if not (lower[0] > -math.pi and upper[-1] < math.pi):
        raise ContourConstructionError("detours reach the branch cut at -1")

    segments: list[Segment] = []
    count = len(detours)
    for index, detour in enumerate(detours):
        segments.append(detour)
        arc_from = upper[index]
        arc_to = lower[index + 1] if index + 1 < count else lower[0] + 2.0 * math.pi
        if not arc_from < arc_to:
            raise ContourConstructionError(
                f"detours at alpha={detour.alpha:.12g} leave no arc to the next crossing"
            )
        segments.append(Arc(arc_from, arc_to))

    contour = Contour(segments=tuple(segments), crossings=tuple(ordered))
    if problem is not None:
        for detour in detours:
            _check_ball_for_second_pole(problem, detour, pole_threshold)
    logger.info("Built contour with %d segments: %s", len(segments), contour.describe())
    return contour


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst_margin: float
    detail: str = ""


@dataclass(frozen=True)
class ContourReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> CheckResult:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def rows(self) -> list[list[object]]:
        return [[c.name, "pass" if c.passed else "fail", c.worst_margin, c.detail] for c in self.checks]


def winding_number(contour: Contour, points_per_segment: int = 256) -> float:
    """Winding number around 0 of the sampled polyline."""
    z = np.array([p for p, _ in contour.sample(points_per_segment)])
    z = np.append(z, z[0])
    turns = np.unwrap(np.angle(z))
    return float((turns[-1] - turns[0]) / (2.0 * math.pi))


def validate_contour(
    contour: Contour,
    problem: CellProblem | None = None,
    n_samples: int = 200,
    pole_threshold: float = DEFAULT_POLE_THRESHOLD,
) -> ContourReport:
    """
    Check closure, orientation, endpoint placement, sides, ordering and,
    with a problem, the singularity indicator along the contour.
    """
    segments = contour.segments
    checks: list[CheckResult] = []

    gaps = [abs(_end(s) - _start(t)) for s, t in zip(segments, segments[1:] + segments[:1], strict=True)]
    worst_gap = max(gaps)
    checks.append(CheckResult("closure", worst_gap <= ENDPOINT_TOL, worst_gap))

    winding = winding_number(contour)
    checks.append(CheckResult("winding", abs(winding - 1.0) < 1e-6, abs(winding - 1.0), f"winding={winding:.6f}"))

    detours = [s for s in segments if isinstance(s, Detour)]
    endpoint_error = 0.0
    angle_error = 0.0
    for d in detours:
        width = math.acos(1.0 - d.delta**2 / 2.0)
        for theta in d.interval:
            endpoint_error = max(endpoint_error, abs(abs(d.point(theta)) - 1.0))
        expected = (d.alpha - width, d.alpha + width)
        start, end = _start(d), _end(d)
        angle_error = max(
            angle_error,
            abs(math.remainder(math.atan2(start.imag, start.real) - expected[0], 2 * math.pi)),
            abs(math.remainder(math.atan2(end.imag, end.real) - expected[1], 2 * math.pi)),
        )
    checks.append(CheckResult("endpoints_on_circle", endpoint_error <= ENDPOINT_TOL, endpoint_error))
    checks.append(CheckResult("endpoint_angles", angle_error <= ENDPOINT_TOL, angle_error))

    side_margin = math.inf
    for d in detours:
        mid = d.point(0.5 * (d.theta_from + d.theta_to))
        signed = abs(mid) - 1.0 if d.side is DetourSide.OUTWARD else 1.0 - abs(mid)
        side_margin = min(side_margin, signed)
    checks.append(CheckResult("sides", side_margin > 0.0, 0.0 if math.isinf(side_margin) else side_margin))

    ordering_ok = True
    for s in segments:
        a, b = s.interval
        if isinstance(s, Arc):
            ordering_ok &= a < b
        else:
            ordering_ok &= a < b < a + 2.0 * math.pi
    if detours:
        first = detours[0].alpha - math.acos(1.0 - detours[0].delta**2 / 2.0)
        last = detours[-1].alpha + math.acos(1.0 - detours[-1].delta**2 / 2.0)
        ordering_ok &= first > -math.pi and last < math.pi
    checks.append(CheckResult("ordering", bool(ordering_ok), 0.0))

    if problem is not None:
        per_segment = max(1, n_samples // len(segments))
        samples: list[complex] = []
        for s in segments:
            a, b = s.interval
            samples.extend(s.point(float(t)) for t in a + (b - a) * (np.arange(per_segment) + 0.5) / per_segment)
        floor = min(singularity_indicator(problem, z) for z in samples)
        checks.append(
            CheckResult("indicator_floor", floor >= pole_threshold, floor, f"{len(samples)} samples")
        )

    report = ContourReport(checks=tuple(checks))
    for check in report.checks:
        if not check.passed:
            logger.warning("Contour check %s failed (margin %.3e)", check.name, check.worst_margin)
    return report
