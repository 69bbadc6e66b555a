"""Full-guide LAP solve."""

from shared import get_logger, write_csv, write_summary
from waveguide import LapError, solve_full

from ..problems import build_problem, build_source
from .common import RunContext, RunResult, failure

logger = get_logger("cli.solve_full")

MODE = "solve-full"

SOLUTION_COLUMNS = ["n", "x1", "x2", "re_u", "im_u"]


def run_solve_full(context: RunContext) -> RunResult:
    """
    Solve on the configured cells and write solution.csv and summary.txt.

    The summary holds the solver metadata and the L2 norm of u on every cell.
    """
    header = context.header(MODE)
    try:
        problem = build_problem(context.config.problem)
        solution = solve_full(problem, build_source(context.config.problem), context.solve_config())
    except LapError as exc:
        return failure(MODE, exc)

    items: dict[str, object] = {
        key: value for key, value in solution.metadata.items() if key != "elapsed_seconds"
    }
    items.update({f"norm_cell_{n}": norm for n, norm in solution.norms().items()})
    artifacts = [
        write_csv(context.path("solution.csv"), header, SOLUTION_COLUMNS, solution.rows()),
        write_summary(context.path("summary.txt"), header, items),
    ]
    logger.info("Full-guide solution written for cells %s", sorted(solution.cells))
    return RunResult(
        success=True,
        mode=MODE,
        artifacts=artifacts,
        context={
            "norms": solution.norms(),
            "elapsed_seconds": solution.metadata["elapsed_seconds"],
        },
    )
