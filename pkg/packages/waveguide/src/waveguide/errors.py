"""Error types raised by the waveguide solver modules."""

from typing import Any


class LapError(Exception):
    """Base class for all solver errors."""

    pass


class InvalidParameterError(LapError, ValueError):
    """Raised when an argument is outside its admissible range."""

    pass


class OutOfDomainError(LapError, ValueError):
    """Raised when a point lies outside the closure of the unit cell."""

    pass


class NearPoleError(LapError):
    """Raised when a cell system is singular or too close to a Floquet multiplier."""

    def __init__(self, z: complex, indicator: float, message: str | None = None):
        self.z = complex(z)
        self.indicator = float(indicator)
        super().__init__(
            message
            or f"cell system near-singular at z={self.z:.12g} "
            f"(indicator={self.indicator:.3e})"
        )


class NumericalFailureError(LapError):
    """Raised when a factorization or eigensolve fails its accuracy check."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class AssumptionViolatedError(LapError):
    """Raised when k^2 produces a stationary or ambiguous crossing."""

    def __init__(self, message: str, crossings: list[Any] | None = None):
        self.crossings = list(crossings or [])
        super().__init__(message)


class ContourConstructionError(LapError):
    """Raised when detour balls overlap, leave the admissible region or hide a pole."""

    pass


class RecoveryFailureError(LapError):
    """Raised when no regularization parameter reproduces the boundary data."""

    def __init__(self, message: str, sweep: list[tuple[float, float]] | None = None):
        self.sweep = list(sweep or [])
        super().__init__(message)


class QuadratureNodeError(LapError):
    """Raised when an integrand callback fails at a quadrature node."""

    def __init__(self, node_index: int, parameter: float, cause: BaseException):
        self.node_index = node_index
        self.parameter = parameter
        super().__init__(
            f"integrand failed at node {node_index} (t={parameter:.12g}): {cause}"
        )
