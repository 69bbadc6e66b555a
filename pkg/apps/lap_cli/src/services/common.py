"""Run context and results shared by the command services."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from shared import get_logger
from waveguide import (
    AssumptionViolatedError,
    LapError,
    NearPoleError,
    NumericalFailureError,
    RecoveryFailureError,
    SolveConfig,
)

from ..config import Settings
from ..problems import build_solve_config
from ..runconfig import RunConfig

logger = get_logger("cli")


@dataclass(frozen=True)
class RunContext:
    """Everything a service needs besides its own section of the configuration."""

    config: RunConfig
    settings: Settings
    output_dir: Path
    threads: int = 1
    write_svg: bool = False

    def header(self, mode: str) -> dict[str, object]:
        return {"mode": mode, **self.config.flat()}

    def solve_config(self, **overrides: Any) -> SolveConfig:
        return build_solve_config(self.config, self.settings, self.threads, **overrides)

    def path(self, name: str) -> Path:
        return self.output_dir / name


@dataclass
class RunResult:
    """Result of one command run."""

    success: bool
    mode: str
    artifacts: list[Path] = field(default_factory=list)
    error_message: str | None = None
    context: dict[str, Any] = field(default_factory=dict)


def failure(mode: str, exc: LapError) -> RunResult:
    """Failed result carrying the diagnostics attached to a solver error."""
    context: dict[str, Any] = {"error_type": type(exc).__name__}
    if isinstance(exc, NearPoleError):
        context.update(z=exc.z, indicator=exc.indicator)
    elif isinstance(exc, NumericalFailureError):
        context.update(exc.diagnostics)
    elif isinstance(exc, AssumptionViolatedError):
        context["crossings"] = [
            (c.alpha, c.band, c.slope) for c in exc.crossings if hasattr(c, "alpha")
        ]
    elif isinstance(exc, RecoveryFailureError):
        context["sweep"] = exc.sweep
    logger.error("%s failed: %s", mode, exc)
    return RunResult(success=False, mode=mode, error_message=str(exc), context=context)
