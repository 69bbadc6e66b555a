"""Contour construction and validation report."""

from shared import get_logger, write_csv
from waveguide import LapError, build_contour, validate_contour
from waveguide.fullguide import resolve_contour

from ..problems import build_problem
from .common import RunContext, RunResult, failure

logger = get_logger("cli.contour")

MODE = "contour"

SAMPLES_PER_SEGMENT = 64


def run_contour(context: RunContext) -> RunResult:
    """
    Build the contour for the configured k^2 and validate it.

    Artifacts:
        contour.csv: sampled points  Re z, Im z, segment
        contour_report.csv: check, status, worst_margin, detail
        crossings.csv: the crossings the contour detours around

    A contour that fails validation is still written, and the run fails.
    """
    section = context.config.contour
    header = context.header(MODE)
    try:
        problem = build_problem(context.config.problem, absorption=0.0)
        contour = resolve_contour(problem, context.solve_config())
        if section.check_balls and contour.crossings:
            contour = build_contour(
                contour.crossings,
                context.solve_config().delta_policy,
                problem,
                context.settings.near_pole_threshold,
            )
        report = validate_contour(
            contour, problem, section.samples, context.settings.near_pole_threshold
        )
    except LapError as exc:
        return failure(MODE, exc)

    artifacts = [
        write_csv(
            context.path("contour.csv"),
            header,
            ["re_z", "im_z", "segment"],
            [[z.real, z.imag, s] for z, s in contour.sample(SAMPLES_PER_SEGMENT)],
        ),
        write_csv(
            context.path("contour_report.csv"),
            header,
            ["check", "status", "worst_margin", "detail"],
            report.rows(),
        ),
        write_csv(
            context.path("crossings.csv"),
            header,
            ["alpha", "band", "slope", "class"],
            [[c.alpha, c.band + 1, c.slope, c.crossing_class.value] for c in contour.crossings],
        ),
    ]
    if context.write_svg:
        from ..plotting import plot_contour

        artifacts.append(plot_contour(contour, context.path("contour.svg")))

    logger.info("Contour: %s", contour.describe())
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        return RunResult(
            success=False,
            mode=MODE,
            artifacts=artifacts,
            error_message=f"contour validation failed: {', '.join(failed)}",
            context={"failed_checks": failed},
        )
    return RunResult(
        success=True, mode=MODE, artifacts=artifacts, context={"segments": len(contour.segments)}
    )
