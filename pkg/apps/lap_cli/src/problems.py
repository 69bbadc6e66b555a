"""Build solver inputs from a run configuration."""

from shared import CellRange
from waveguide import CellProblem, MediumSpec, SolveConfig, SourceSpec, build_structured_mesh
from waveguide.contour import DeltaPolicy
from waveguide.medium import ring_medium, ring_source

from .config import Settings
from .runconfig import ProblemSection, RunConfig


def build_medium(section: ProblemSection) -> MediumSpec:
    if section.medium == "builtin-ring":
        return ring_medium()
    if section.medium == "homogeneous":
        return MediumSpec.homogeneous(1.0)
    assert section.q is not None
    return MediumSpec.from_expression(section.q, section.q_min)


def build_source(section: ProblemSection) -> SourceSpec:
    if section.f is None:
        return ring_source()
    return SourceSpec.from_expression(section.f, section.f_im)


def build_problem(
    section: ProblemSection,
    h: float | None = None,
    absorption: float | None = None,
) -> CellProblem:
    """Cell problem for the configured medium and k^2 on a fresh mesh of width h."""
    mesh = build_structured_mesh(h if h is not None else section.h)
    return CellProblem(
        mesh=mesh,
        medium=build_medium(section),
        k2=section.k2,
        absorption=section.absorption if absorption is None else absorption,
    )


def build_solve_config(
    config: RunConfig,
    settings: Settings,
    threads: int,
    n_min: int | None = None,
    n_max: int | None = None,
    n_nodes: int | None = None,
) -> SolveConfig:
    """Full-guide solver settings, with optional overrides of the cell range and N."""
    solver, contour = config.solver, config.contour
    return SolveConfig(
        n_nodes=solver.n_nodes if n_nodes is None else n_nodes,
        n0=solver.n0,
        cells=CellRange(
            n_min=solver.n_min if n_min is None else n_min,
            n_max=solver.n_max if n_max is None else n_max,
        ),
        delta_policy=DeltaPolicy(delta=contour.delta, margin=contour.margin),
        dispersion_h=contour.dispersion_h,
        dispersion_n_alpha=contour.n_alpha,
        dispersion_n_bands=contour.n_bands,
        threads=threads,
        chunk_size=solver.chunk_size,
        check_poles=settings.check_poles,
        pole_threshold=settings.near_pole_threshold,
    )
