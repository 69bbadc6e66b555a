"""Dispersion diagram, crossings and stop bands."""

from shared import get_logger, write_csv
from waveguide import LapError, compute_diagram, find_crossings, stop_bands

from ..problems import build_problem
from .common import RunContext, RunResult, failure

logger = get_logger("cli.dispersion")

MODE = "dispersion"


def run_dispersion(context: RunContext) -> RunResult:
    """
    Compute the band functions, the crossings at the configured k^2 and the
    stop bands in [k2_min, k2_max].

    Artifacts:
        dispersion.csv: alpha and one column per band
        crossings.csv: alpha, band, slope, class
        stop_bands.csv: k2_low, k2_high
    """
    section = context.config.dispersion
    header = context.header(MODE)
    try:
        problem = build_problem(context.config.problem, absorption=0.0)
        n_bands = min(section.n_bands, problem.mesh.n_dofs // 4)
        diagram = compute_diagram(problem, section.n_alpha, n_bands, context.threads)
        artifacts = [
            write_csv(
                context.path("dispersion.csv"),
                header,
                ["alpha", *(f"mu_{band + 1}" for band in range(diagram.n_bands))],
                diagram.rows(),
            )
        ]
        gaps = stop_bands(diagram, (section.k2_min, section.k2_max), problem)
        artifacts.append(
            write_csv(context.path("stop_bands.csv"), header, ["k2_low", "k2_high"], gaps)
        )
        crossings = find_crossings(diagram, problem, context.config.problem.k2)
        artifacts.append(
            write_csv(
                context.path("crossings.csv"),
                header,
                ["alpha", "band", "slope", "class"],
                [[c.alpha, c.band + 1, c.slope, c.crossing_class.value] for c in crossings],
            )
        )
        if context.write_svg:
            from ..plotting import plot_dispersion

            artifacts.append(
                plot_dispersion(
                    diagram, context.config.problem.k2, crossings, context.path("dispersion.svg")
                )
            )
    except LapError as exc:
        return failure(MODE, exc)

    logger.info(
        "Dispersion: %d bands, %d crossings, %d stop bands",
        diagram.n_bands, len(crossings), len(gaps),
    )
    return RunResult(
        success=True,
        mode=MODE,
        artifacts=artifacts,
        context={"crossings": len(crossings), "stop_bands": gaps},
    )
