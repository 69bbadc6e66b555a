"""Run configuration files.

A run is described by an INI file with the sections below. Keys are matched
case-insensitively through the field maps, so ``k^2``, ``k2`` and
``k_squared`` all set the same value. Every section is optional; missing
values take the defaults of the section models.

    [problem]     medium, q, q_min, f, f_im, k^2, eps, h
    [solver]      N, N0, n_min, n_max, chunk_size
    [contour]     delta, margin, dispersion_h, n_alpha, n_bands, samples, check_balls
    [dispersion]  n_alpha, n_bands, k2_min, k2_max
    [scan]        r_min, r_max, n_r, n_theta
    [oracle]      R, eps, h
    [convergence] N, h, N_ref, h_ref, cell
    [halfguide]   P1, R1, alphas, phi, n_max
"""

import configparser
from collections.abc import Mapping
from pathlib import Path
from typing import Annotated, Any, Literal

from pydantic import BeforeValidator, Field, ValidationError, field_validator, model_validator

from shared import BaseConfigModel, compile_expression
from shared.types import (
    Absorption,
    EvenNodeCount,
    GradingOrder,
    MeshWidth,
    PositiveFloat,
    UnitFraction,
    WaveNumber2,
)


class ConfigError(ValueError):
    """Raised when a run configuration file cannot be read or validated."""

    pass


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item for item in value.replace(",", " ").split() if item]
    return value


SeparatedList = BeforeValidator(_split_list)


# ============================================================================
# Section models
# ============================================================================


class ProblemSection(BaseConfigModel):
    medium: Literal["builtin-ring", "homogeneous", "expression"] = "builtin-ring"
    q: str | None = None
    q_min: PositiveFloat = 1.0
    f: str | None = None
    f_im: str | None = None
    k2: WaveNumber2 = 5.0
    absorption: Absorption = 0.0
    h: MeshWidth = 0.05

    @model_validator(mode="after")
    def _check_expressions(self) -> "ProblemSection":
        if self.medium == "expression" and self.q is None:
            raise ValueError("medium = expression needs a q expression")
        if self.medium != "builtin-ring" and self.f is None:
            raise ValueError(f"medium = {self.medium} needs a source expression f")
        for text in (self.q, self.f, self.f_im):
            if text is not None:
                compile_expression(text)
        return self


class SolverSection(BaseConfigModel):
    n_nodes: EvenNodeCount = 32
    n0: GradingOrder = 6
    n_min: int = 0
    n_max: int = 0
    chunk_size: int = Field(default=16, ge=1)

    @model_validator(mode="after")
    def _check_cells(self) -> "SolverSection":
        if self.n_min > self.n_max:
            raise ValueError(f"n_min={self.n_min} exceeds n_max={self.n_max}")
        return self


class ContourSection(BaseConfigModel):
    delta: UnitFraction = 0.1
    margin: UnitFraction = 0.4
    dispersion_h: MeshWidth = 0.02
    n_alpha: int = Field(default=64, ge=16)
    n_bands: int = Field(default=6, ge=1)
    samples: int = Field(default=200, ge=8)
    check_balls: bool = False


class DispersionSection(BaseConfigModel):
    n_alpha: int = Field(default=64, ge=16)
    n_bands: int = Field(default=6, ge=1)
    k2_min: float = Field(default=0.0, ge=0.0)
    k2_max: float = Field(default=40.0, gt=0.0)

    @model_validator(mode="after")
    def _check_range(self) -> "DispersionSection":
        if not self.k2_min < self.k2_max:
            raise ValueError(f"empty k2 range [{self.k2_min}, {self.k2_max}]")
        return self


class ScanSection(BaseConfigModel):
    r_min: float = Field(default=0.8, gt=0.0, lt=1.0)
    r_max: float = Field(default=1.25, gt=1.0)
    n_r: int = Field(default=21, ge=2)
    n_theta: int = Field(default=64, ge=4)


class OracleSection(BaseConfigModel):
    R: int = Field(default=20, ge=5)
    epsilons: Annotated[list[PositiveFloat], SeparatedList] = Field(
        default_factory=lambda: [0.04, 0.02, 0.01]
    )
    h: MeshWidth | None = None

    @field_validator("epsilons")
    @classmethod
    def _check_decreasing(cls, value: list[float]) -> list[float]:
        if len(value) < 2 or any(not b < a for a, b in zip(value, value[1:], strict=False)):
            raise ValueError("eps values must be at least two and strictly decreasing")
        return value


class ConvergenceSection(BaseConfigModel):
    n_values: Annotated[list[EvenNodeCount], SeparatedList] = Field(
        default_factory=lambda: [8, 16, 32]
    )
    h_values: Annotated[list[MeshWidth], SeparatedList] = Field(
        default_factory=lambda: [0.05, 0.025]
    )
    n_ref: EvenNodeCount = 128
    h_ref: MeshWidth = 0.0125
    cell: int = 0

    @model_validator(mode="after")
    def _check_reference(self) -> "ConvergenceSection":
        if not self.n_values or not self.h_values:
            raise ValueError("convergence needs at least one N and one h")
        if max(self.n_values) > self.n_ref:
            raise ValueError(f"reference N_ref={self.n_ref} is below the largest N")
        if min(self.h_values) < self.h_ref:
            raise ValueError(f"reference h_ref={self.h_ref} is above the smallest h")
        return self


class HalfguideSection(BaseConfigModel):
    p1: int = Field(default=3, ge=1)
    r1: int = Field(default=8, ge=1)
    alphas: Annotated[list[PositiveFloat], SeparatedList] = Field(
        default_factory=lambda: [1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4]
    )
    phi_file: Path | None = None
    n_max: int = Field(default=3, ge=1)


class RunConfig(BaseConfigModel):
    """Validated contents of a run configuration file."""

    problem: ProblemSection = ProblemSection()
    solver: SolverSection = SolverSection()
    contour: ContourSection = ContourSection()
    dispersion: DispersionSection = DispersionSection()
    scan: ScanSection = ScanSection()
    oracle: OracleSection = OracleSection()
    convergence: ConvergenceSection = ConvergenceSection()
    halfguide: HalfguideSection = HalfguideSection()

    def flat(self) -> dict[str, object]:
        """Every setting as ``section.field``, for artifact headers."""
        out: dict[str, object] = {}
        for section_name in type(self).model_fields:
            section = getattr(self, section_name)
            for field_name in type(section).model_fields:
                value = getattr(section, field_name)
                if isinstance(value, list):
                    value = " ".join(
                        format(v, ".17g") if isinstance(v, float) else str(v) for v in value
                    )
                elif value is None:
                    value = "none"
                out[f"{section_name}.{field_name}"] = value
        return out


# ============================================================================
# Field Mapping Layer
# ============================================================================
# Each section maps model field names to the (lower-case) keys accepted in the
# file. configparser lower-cases keys, so N and n are the same key.
# ============================================================================

SECTION_FIELD_MAP: dict[str, dict[str, list[str]]] = {
    "problem": {
        "medium": ["medium"],
        "q": ["q", "medium_expr"],
        "q_min": ["q_min", "qmin"],
        "f": ["f", "f_re", "source"],
        "f_im": ["f_im", "source_im"],
        "k2": ["k^2", "k2", "k_squared"],
        "absorption": ["eps", "epsilon", "absorption"],
        "h": ["h", "mesh_width"],
    },
    "solver": {
        "n_nodes": ["n", "n_nodes", "nodes"],
        "n0": ["n0", "grading"],
        "n_min": ["n_min"],
        "n_max": ["n_max"],
        "chunk_size": ["chunk_size"],
    },
    "contour": {
        "delta": ["delta"],
        "margin": ["margin", "delta_margin"],
        "dispersion_h": ["dispersion_h"],
        "n_alpha": ["n_alpha"],
        "n_bands": ["n_bands"],
        "samples": ["samples", "n_samples"],
        "check_balls": ["check_balls"],
    },
    "dispersion": {
        "n_alpha": ["n_alpha"],
        "n_bands": ["n_bands"],
        "k2_min": ["k2_min", "k^2_min"],
        "k2_max": ["k2_max", "k^2_max"],
    },
    "scan": {
        "r_min": ["r_min"],
        "r_max": ["r_max"],
        "n_r": ["n_r"],
        "n_theta": ["n_theta"],
    },
    "oracle": {
        "R": ["r", "strip_cells"],
        "epsilons": ["eps", "epsilons"],
        "h": ["h"],
    },
    "convergence": {
        "n_values": ["n", "n_values"],
        "h_values": ["h", "h_values"],
        "n_ref": ["n_ref"],
        "h_ref": ["h_ref"],
        "cell": ["cell", "n_cell"],
    },
    "halfguide": {
        "p1": ["p1", "p_max"],
        "r1": ["r1", "r_count"],
        "alphas": ["alphas", "alpha"],
        "phi_file": ["phi", "phi_file"],
        "n_max": ["n_max"],
    },
}


def _map_section(name: str, items: Mapping[str, str]) -> dict[str, str]:
    field_map = SECTION_FIELD_MAP[name]
    mapped: dict[str, str] = {}
    for key, value in items.items():
        field_name = next((f for f, aliases in field_map.items() if key.lower() in aliases), None)
        if field_name is None:
            raise ConfigError(f"unknown key '{key}' in section [{name}]")
        if field_name in mapped:
            raise ConfigError(f"key '{key}' repeats {field_name} in section [{name}]")
        mapped[field_name] = value.strip()
    return mapped


def parse_run_config(text: str, base_dir: Path | None = None) -> RunConfig:
    """
    Parse and validate a run configuration from INI text.

    Args:
        text: File contents
        base_dir: Directory against which a relative phi file is resolved

    Raises:
        ConfigError: On syntax errors, unknown sections or keys, or invalid values
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc

    sections: dict[str, dict[str, str]] = {}
    for name in parser.sections():
        key = name.strip().lower()
        if key not in SECTION_FIELD_MAP:
            raise ConfigError(f"unknown section [{name}]")
        sections[key] = _map_section(key, parser[name])

    phi = sections.get("halfguide", {}).get("phi_file")
    if phi and base_dir is not None and not Path(phi).is_absolute():
        sections["halfguide"]["phi_file"] = str(base_dir / phi)

    try:
        return RunConfig.model_validate(sections)
    except ValidationError as exc:
        problems = "; ".join(
            f"[{'.'.join(str(p) for p in error['loc'])}] {error['msg']}" for error in exc.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from exc


def load_run_config(path: Path | None) -> RunConfig:
    """Read a configuration file, or return the defaults when no path is given."""
    if path is None:
        return RunConfig()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_run_config(text, path.parent)
