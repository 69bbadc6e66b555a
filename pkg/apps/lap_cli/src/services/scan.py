"""Singularity indicator scan around the unit circle."""

from shared import get_logger, write_csv
from waveguide import LapError, multiplier_scan

from ..problems import build_problem
from .common import RunContext, RunResult, failure

logger = get_logger("cli.scan")

MODE = "scan"


def run_scan(context: RunContext) -> RunResult:
    """Write scan.csv with rows  Re z, Im z, indicator  on the configured polar grid."""
    section = context.config.scan
    try:
        problem = build_problem(context.config.problem)
        scan = multiplier_scan(
            problem, (section.r_min, section.r_max), (section.n_r, section.n_theta), context.threads
        )
    except LapError as exc:
        return failure(MODE, exc)

    path = write_csv(
        context.path("scan.csv"), context.header(MODE), ["re_z", "im_z", "indicator"], scan.rows()
    )
    floor = float(scan.values.min())
    logger.info("Scan finished, smallest indicator %.3e", floor)
    return RunResult(success=True, mode=MODE, artifacts=[path], context={"indicator_min": floor})
