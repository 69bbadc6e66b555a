"""LAP solutions of scattering problems in periodic 2-D waveguides."""

from waveguide.cell_solver import (
    CellProblem,
    CellSolution,
    assemble_cell_system,
    singularity_indicator,
    solve_cell,
)
from waveguide.contour import Contour, DeltaPolicy, build_contour, validate_contour
from waveguide.dispersion import (
    Crossing,
    CrossingClass,
    DispersionDiagram,
    band_eigenvalues,
    compute_diagram,
    find_crossings,
    multiplier_scan,
    stop_bands,
)
from waveguide.errors import (
    AssumptionViolatedError,
    ContourConstructionError,
    InvalidParameterError,
    LapError,
    NearPoleError,
    NumericalFailureError,
    OutOfDomainError,
    QuadratureNodeError,
    RecoveryFailureError,
)
from waveguide.fullguide import LapSolution, SolveConfig, solve_full, solve_full_batch
from waveguide.halfguide import (
    SourceBasis,
    TraceVector,
    apply_A,
    build_operator_matrix,
    solve_half,
    tikhonov_solve,
)
from waveguide.medium import MediumSpec, SourceSpec, ring_medium, ring_source
from waveguide.mesh import UnitCellMesh, build_structured_mesh, locate_point
from waveguide.oracle import (
    bloch_transform_truncated,
    extrapolate_lap,
    inverse_bloch_transform,
    solve_absorbing,
)
from waveguide.quadrature import GradedMap, graded_map_eval, integrate_segment

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolatedError",
    "CellProblem",
    "CellSolution",
    "Contour",
    "ContourConstructionError",
    "Crossing",
    "CrossingClass",
    "DeltaPolicy",
    "DispersionDiagram",
    "GradedMap",
    "InvalidParameterError",
    "LapError",
    "LapSolution",
    "MediumSpec",
    "NearPoleError",
    "NumericalFailureError",
    "OutOfDomainError",
    "QuadratureNodeError",
    "RecoveryFailureError",
    "SolveConfig",
    "SourceBasis",
    "SourceSpec",
    "TraceVector",
    "UnitCellMesh",
    "apply_A",
    "assemble_cell_system",
    "band_eigenvalues",
    "bloch_transform_truncated",
    "build_contour",
    "build_operator_matrix",
    "build_structured_mesh",
    "compute_diagram",
    "extrapolate_lap",
    "find_crossings",
    "graded_map_eval",
    "integrate_segment",
    "inverse_bloch_transform",
    "locate_point",
    "multiplier_scan",
    "ring_medium",
    "ring_source",
    "singularity_indicator",
    "solve_absorbing",
    "solve_cell",
    "solve_full",
    "solve_full_batch",
    "solve_half",
    "stop_bands",
    "tikhonov_solve",
    "validate_contour",
]
