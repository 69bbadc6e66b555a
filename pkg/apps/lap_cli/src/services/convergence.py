"""Quadrature and mesh convergence study."""

import math

from shared import get_logger, write_csv
from waveguide import LapError, LapSolution, solve_full
from waveguide.fullguide import compare_on_mesh

from ..problems import build_problem, build_source
from .common import RunContext, RunResult, failure

logger = get_logger("cli.convergence")

MODE = "convergence"


def observed_orders(n_values: list[int], errors: list[float]) -> list[float]:
    """log(e_i / e_{i+1}) / log(N_{i+1} / N_i), NaN where an error vanishes."""
    orders = [math.nan]
    for i in range(1, len(errors)):
        previous, current = errors[i - 1], errors[i]
        if previous > 0.0 and current > 0.0:
            orders.append(math.log(previous / current) / math.log(n_values[i] / n_values[i - 1]))
        else:
            orders.append(math.nan)
    return orders


def run_convergence(context: RunContext) -> RunResult:
    """
    Tabulate solution errors over a grid of node counts N and mesh widths h.

    Artifacts:
        convergence.csv: h, N, error against the (N_ref, h_ref) reference on cell n
        self_convergence.csv: h, N, error against N_ref on the same mesh, observed order
    """
    section = context.config.convergence
    header = context.header(MODE)
    cell = section.cell
    source = build_source(context.config.problem)
    n_values = sorted(section.n_values)

    def solve(h: float, n_nodes: int) -> LapSolution:
        problem = build_problem(context.config.problem, h=h)
        config = context.solve_config(n_min=cell, n_max=cell, n_nodes=n_nodes)
        return solve_full(problem, source, config)

    table: list[list[float]] = []
    self_table: list[list[float]] = []
    try:
        reference = solve(section.h_ref, section.n_ref)
        for h in sorted(section.h_values, reverse=True):
            same_mesh = solve(h, section.n_ref)
            self_errors: list[float] = []
            for n_nodes in n_values:
                solution = solve(h, n_nodes)
                table.append([h, n_nodes, compare_on_mesh(solution, reference, cell)])
                self_errors.append(compare_on_mesh(solution, same_mesh, cell))
            orders = observed_orders(n_values, self_errors)
            self_table.extend(
                [h, n, error, order]
                for n, error, order in zip(n_values, self_errors, orders, strict=True)
            )
            logger.info("h=%.4g: errors against N_ref %s", h, [f"{e:.2e}" for e in self_errors])
    except LapError as exc:
        return failure(MODE, exc)

    artifacts = [
        write_csv(context.path("convergence.csv"), header, ["h", "N", "error"], table),
        write_csv(
            context.path("self_convergence.csv"),
            header,
            ["h", "N", "error", "observed_order"],
            self_table,
        ),
    ]
    return RunResult(
        success=True,
        mode=MODE,
        artifacts=artifacts,
        context={"worst_error": max(row[2] for row in table)},
    )
