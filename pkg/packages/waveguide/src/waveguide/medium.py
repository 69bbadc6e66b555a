"""Refractive-index media and source terms on the unit cell."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from shared import ExpressionError, compile_expression, cutoff

from .errors import InvalidParameterError

FieldFunction = Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.generic]]

RING_CENTER = (0.0, 0.5)
RING_INNER = 0.1
RING_OUTER = 0.3
RING_CONTRAST = 8.0
RING_SOURCE_AMPLITUDE = 3.0


def periodic_x1(x1: NDArray[np.float64]) -> NDArray[np.float64]:
    """Fold x1 into the cell [-1/2, 1/2)."""
    return x1 - np.floor(x1 + 0.5)


@dataclass(frozen=True)
class MediumSpec:
    """
    Refractive index q > 0 on the unit cell.

    ``q`` is evaluated on cell coordinates; callers on other cells fold x1 with
    :func:`periodic_x1` first, so q is always the restriction of a 1-periodic
    function.
    """

    q: FieldFunction
    q_min: float
    name: str = "custom"

    def __post_init__(self) -> None:
        if not self.q_min > 0.0:
            raise InvalidParameterError(f"q_min must be positive, got {self.q_min}")

    def evaluate(self, x1: NDArray[np.float64], x2: NDArray[np.float64]) -> NDArray[np.float64]:
        values = np.asarray(self.q(x1, x2), dtype=float)
        values = np.broadcast_to(values, np.broadcast_shapes(np.shape(x1), np.shape(x2)))
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError(f"medium {self.name!r} is not finite on the cell")
        low = float(values.min()) if values.size else self.q_min
        if low < self.q_min * (1.0 - 1e-12):
            raise InvalidParameterError(
                f"medium {self.name!r} drops to q={low:.6g} below q_min={self.q_min:.6g}"
            )
        return np.array(values)

    @classmethod
    def homogeneous(cls, value: float = 1.0) -> "MediumSpec":
        return cls(q=lambda x1, x2: np.full(np.broadcast(x1, x2).shape, value), q_min=value, name=f"q={value:g}")

    @classmethod
    def from_expression(cls, source: str, q_min: float) -> "MediumSpec":
        try:
            expression = compile_expression(source)
        except ExpressionError as exc:
            raise InvalidParameterError(f"invalid medium expression: {exc}") from exc
        return cls(q=expression, q_min=q_min, name=expression.source)


@dataclass(frozen=True)
class SourceSpec:
    """Complex source term f supported in the unit cell."""

    f: FieldFunction
    name: str = "custom"
    is_zero: bool = False

    def evaluate(self, x1: NDArray[np.float64], x2: NDArray[np.float64]) -> NDArray[np.complex128]:
        shape = np.broadcast_shapes(np.shape(x1), np.shape(x2))
        if self.is_zero:
            return np.zeros(shape, dtype=complex)
        values = np.asarray(self.f(x1, x2), dtype=complex)
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError(f"source {self.name!r} is not finite on the cell")
        return np.array(np.broadcast_to(values, shape))

    @classmethod
    def zero(cls) -> "SourceSpec":
        return cls(f=lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape, dtype=complex), name="0", is_zero=True)

    @classmethod
    def from_expression(cls, real: str, imag: str | None = None) -> "SourceSpec":
        try:
            re_part = compile_expression(real)
            im_part = compile_expression(imag) if imag and imag.strip() else None
        except ExpressionError as exc:
            raise InvalidParameterError(f"invalid source expression: {exc}") from exc

        def f(x1: NDArray[np.float64], x2: NDArray[np.float64]) -> NDArray[np.complex128]:
            values = re_part(x1, x2).astype(complex)
            if im_part is not None:
                values = values + 1j * im_part(x1, x2)
            return values

        name = re_part.source if im_part is None else f"({re_part.source}) + i({im_part.source})"
        return cls(f=f, name=name)

    def scaled(self, factor: complex) -> "SourceSpec":
        if self.is_zero or factor == 0:
            return SourceSpec.zero()
        return SourceSpec(f=lambda x1, x2: factor * self.evaluate(x1, x2), name=f"{factor}*{self.name}")

    def __add__(self, other: "SourceSpec") -> "SourceSpec":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        return SourceSpec(
            f=lambda x1, x2: self.evaluate(x1, x2) + other.evaluate(x1, x2),
            name=f"{self.name} + {other.name}",
        )


def combine_sources(coefficients: Sequence[complex], sources: Sequence[SourceSpec]) -> SourceSpec:
    """Linear combination sum_l c_l f_l evaluated in one pass."""
    if len(coefficients) != len(sources):
        raise InvalidParameterError("coefficient and source counts differ")
    pairs = [(complex(c), s) for c, s in zip(coefficients, sources, strict=True) if c != 0 and not s.is_zero]
    if not pairs:
        return SourceSpec.zero()

    def f(x1: NDArray[np.float64], x2: NDArray[np.float64]) -> NDArray[np.complex128]:
        total = np.zeros(np.broadcast_shapes(np.shape(x1), np.shape(x2)), dtype=complex)
        for c, source in pairs:
            total = total + c * source.evaluate(x1, x2)
        return total

    return SourceSpec(f=f, name=f"combination of {len(pairs)} sources")


def ring_profile(x1: NDArray[np.float64], x2: NDArray[np.float64]) -> NDArray[np.float64]:
    """zeta(|x - a0|): 1 inside radius 0.1, 0 outside radius 0.3, C^8 in between."""
    radius = np.hypot(periodic_x1(np.asarray(x1, dtype=float)) - RING_CENTER[0], np.asarray(x2, dtype=float) - RING_CENTER[1])
    return cutoff(radius, RING_INNER, RING_OUTER)


def ring_medium() -> MediumSpec:
    """q = 1 + 8 zeta(|x - a0|): 9 in the core, 1 outside the ring."""
    return MediumSpec(
        q=lambda x1, x2: 1.0 + RING_CONTRAST * ring_profile(x1, x2),
        q_min=1.0,
        name="builtin-ring",
    )


def ring_source() -> SourceSpec:
    """f = 3 cos(2 pi x1) sin(2 pi x2) zeta(|x - a0|)."""

    def f(x1: NDArray[np.float64], x2: NDArray[np.float64]) -> NDArray[np.complex128]:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        values = RING_SOURCE_AMPLITUDE * np.cos(2 * np.pi * x1) * np.sin(2 * np.pi * x2) * ring_profile(x1, x2)
        return values.astype(complex)

    return SourceSpec(f=f, name="builtin-ring")
