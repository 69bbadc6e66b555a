"""Common Pydantic types for waveguide-lap configuration models."""

from typing import Annotated

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, model_validator


def _check_even(value: int) -> int:
    if value % 2:
        raise ValueError(f"node count must be even, got {value}")
    return value


# Annotated types for common fields
MeshWidth = Annotated[
    float, Field(gt=0.0, le=0.5, description="Target element diameter h")
]
WaveNumber2 = Annotated[float, Field(ge=0.0, description="Squared wavenumber k^2")]
Absorption = Annotated[float, Field(ge=0.0, description="Absorption epsilon")]
EvenNodeCount = Annotated[
    int, Field(ge=4, description="Quadrature nodes per segment"), AfterValidator(_check_even)
]
GradingOrder = Annotated[
    int, Field(ge=2, description="Endpoint derivative vanishing order N0")
]
PositiveFloat = Annotated[float, Field(gt=0.0)]
UnitFraction = Annotated[float, Field(gt=0.0, lt=1.0)]
ThreadCount = Annotated[int, Field(ge=1)]


class BaseConfigModel(BaseModel):
    """Base model for validated, immutable configuration blocks."""

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        populate_by_name=True,
    )


class CellRange(BaseConfigModel):
    """Inclusive range of cell indices n_min..n_max."""

    n_min: int = 0
    n_max: int = 0

    @model_validator(mode="after")
    def _check_order(self) -> "CellRange":
        if self.n_min > self.n_max:
            raise ValueError(f"empty cell range [{self.n_min}, {self.n_max}]")
        return self

    def indices(self) -> list[int]:
        return list(range(self.n_min, self.n_max + 1))
