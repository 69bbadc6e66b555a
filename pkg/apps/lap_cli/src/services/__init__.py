"""Command services for the waveguide LAP command line."""

from collections.abc import Callable

from .common import RunContext, RunResult, failure
from .contour import run_contour
from .convergence import run_convergence
from .dispersion import run_dispersion
from .oracle import run_oracle
from .scan import run_scan
from .solve_full import run_solve_full
from .solve_half import run_solve_half

SERVICES: dict[str, Callable[[RunContext], RunResult]] = {
    "dispersion": run_dispersion,
    "scan": run_scan,
    "contour": run_contour,
    "solve-full": run_solve_full,
    "solve-half": run_solve_half,
    "oracle": run_oracle,
    "convergence": run_convergence,
}


def run(mode: str, context: RunContext) -> RunResult:
    """Run one command and return its result."""
    if mode not in SERVICES:
        return RunResult(success=False, mode=mode, error_message=f"unknown mode '{mode}'")
    return SERVICES[mode](context)


__all__ = [
    "SERVICES",
    "RunContext",
    "RunResult",
    "failure",
    "run",
]
