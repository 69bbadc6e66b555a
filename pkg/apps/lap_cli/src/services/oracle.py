"""Absorption-limit reference solution and comparison with the LAP solve."""

from shared import get_logger, write_csv, write_summary
from waveguide import LapError, LapSolution, extrapolate_lap, solve_full
from waveguide.assembly import l2_norm, relative_l2_error
from waveguide.mesh import build_strip
from waveguide.oracle import solve_absorbing_sweep

from ..problems import build_problem, build_source
from .common import RunContext, RunResult, failure
from .solve_full import SOLUTION_COLUMNS

logger = get_logger("cli.oracle")

MODE = "oracle"


def run_oracle(context: RunContext) -> RunResult:
    """
    Extrapolate absorbing strip solutions to eps = 0 and compare with solve_full.

    The cells compared are the configured solver cells clipped to the strip.

    Artifacts:
        oracle_solution.csv: the extrapolated field on the compared cells
        oracle_report.csv: n, norm_oracle, norm_lap, relative_error
        oracle_summary.txt: difference ratio and warning
    """
    section = context.config.oracle
    solver = context.config.solver
    header = context.header(MODE)
    cells = [n for n in range(solver.n_min, solver.n_max + 1) if abs(n) <= section.R]
    if not cells:
        return RunResult(
            success=False,
            mode=MODE,
            error_message=f"no solver cell lies within the strip |n| <= {section.R}",
        )
    try:
        problem = build_problem(context.config.problem, h=section.h, absorption=0.0)
        source = build_source(context.config.problem)
        strip = build_strip(problem.mesh, section.R)
        fields = solve_absorbing_sweep(problem, source, strip, section.epsilons, context.threads)
        extrapolation = extrapolate_lap([f.values for f in fields], section.epsilons)
        oracle = LapSolution(
            {n: strip.restrict(extrapolation.values, n) for n in cells},
            problem.mesh,
            {"R": section.R, "ratio": extrapolation.ratio},
        )
        lap = solve_full(
            problem, source, context.solve_config(n_min=min(cells), n_max=max(cells))
        )
    except LapError as exc:
        return failure(MODE, exc)

    mesh = problem.mesh
    report = [
        [
            n,
            l2_norm(mesh, oracle.cell(n)),
            l2_norm(mesh, lap.cell(n)),
            relative_l2_error(mesh, lap.cell(n), oracle.cell(n)),
        ]
        for n in cells
    ]
    artifacts = [
        write_csv(context.path("oracle_solution.csv"), header, SOLUTION_COLUMNS, oracle.rows()),
        write_csv(
            context.path("oracle_report.csv"),
            header,
            ["n", "norm_oracle", "norm_lap", "relative_error"],
            report,
        ),
        write_summary(
            context.path("oracle_summary.txt"),
            header,
            {
                "difference_ratio": extrapolation.ratio,
                "warning": extrapolation.warning or "none",
                "max_relative_error": max(row[3] for row in report),
            },
        ),
    ]
    logger.info(
        "Oracle comparison: ratio %.3f, worst relative error %.3e",
        extrapolation.ratio, max(row[3] for row in report),
    )
    return RunResult(
        success=True,
        mode=MODE,
        artifacts=artifacts,
        context={"ratio": extrapolation.ratio, "warning": extrapolation.warning},
    )
