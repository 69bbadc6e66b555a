"""Half-guide solve from Dirichlet data on Gamma_1."""

from shared import get_logger, read_trace_csv, write_csv, write_summary
from waveguide import LapError, SourceBasis, TraceVector, solve_full, solve_half

from ..problems import build_problem, build_source
from .common import RunContext, RunResult, failure
from .solve_full import SOLUTION_COLUMNS

logger = get_logger("cli.solve_half")

MODE = "solve-half"


def run_solve_half(context: RunContext) -> RunResult:
    """
    Recover a source for the boundary data and write the half-guide solution.

    Without a phi file the data is manufactured as the Gamma_1 trace of the
    full-guide solution for the configured source, which gives a problem
    with a known answer.

    Artifacts:
        half_solution.csv: n, x1, x2, re_u, im_u on cells 1..n_max
        coefficients.csv: index, p, r, re_c, im_c
        sweep.csv: alpha, mismatch, coefficient_norm
        summary.txt: chosen alpha and the Gamma_1 mismatch
    """
    section = context.config.halfguide
    header = context.header(MODE)
    try:
        problem = build_problem(context.config.problem)
        config = context.solve_config(n_min=0, n_max=section.n_max)
        if section.phi_file is not None:
            try:
                x2, values = read_trace_csv(section.phi_file)
            except (OSError, ValueError) as exc:
                return RunResult(
                    success=False, mode=MODE, error_message=f"cannot read boundary data: {exc}"
                )
            data = TraceVector.from_samples(problem.mesh, x2, values)
        else:
            reference = solve_full(
                problem,
                build_source(context.config.problem),
                context.solve_config(n_min=0, n_max=0),
            )
            data = TraceVector.from_solution(reference, 0)
        basis = SourceBasis(section.p1, section.r1)
        result = solve_half(problem, data, basis, section.alphas, config)
    except LapError as exc:
        return failure(MODE, exc)

    artifacts = [
        write_csv(
            context.path("half_solution.csv"), header, SOLUTION_COLUMNS, result.solution.rows()
        ),
        write_csv(
            context.path("coefficients.csv"),
            header,
            ["index", "p", "r", "re_c", "im_c"],
            [
                [index, p, r, c.real, c.imag]
                for index, ((p, r), c) in enumerate(
                    zip(basis.modes(), result.coefficients, strict=True)
                )
            ],
        ),
        write_csv(
            context.path("sweep.csv"),
            header,
            ["alpha", "mismatch", "coefficient_norm"],
            [list(entry) for entry in result.sweep],
        ),
        write_summary(
            context.path("summary.txt"),
            header,
            {
                "alpha_chosen": result.alpha,
                "gamma1_mismatch": result.gamma1_mismatch,
                "basis_size": basis.size,
                "boundary_data": str(section.phi_file) if section.phi_file else "manufactured",
                **{f"norm_cell_{n}": norm for n, norm in result.solution.norms().items()},
            },
        ),
    ]
    logger.info("Half-guide solve: alpha=%.3e, mismatch=%.3e", result.alpha, result.gamma1_mismatch)
    return RunResult(
        success=True,
        mode=MODE,
        artifacts=artifacts,
        context={"alpha": result.alpha, "gamma1_mismatch": result.gamma1_mismatch},
    )
