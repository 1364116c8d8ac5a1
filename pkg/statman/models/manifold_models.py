"""Pydantic models for manifold files and model family specifications."""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

Family = Literal[
    "sphere",
    "hyperbolic",
    "euclidean",
    "normal_fisher",
    "gamma_fisher",
    "flat_with_cubic",
]


class CubicEntry(BaseModel):
    """One cubic-form component; permutations are implied."""

    indices: List[int] = Field(
        ..., min_length=3, max_length=3, description="1-based coordinate indices"
    )
    expr: str = Field(..., min_length=1, description="Expression over the coordinates")


class CubicValue(BaseModel):
    """Constant cubic-form component for the flat_with_cubic family."""

    indices: List[int] = Field(..., min_length=3, max_length=3)
    value: float


class BuiltinSection(BaseModel):
    """Reference to a built-in model family."""

    family: Family = Field(..., description="Model family name")
    params: Dict[str, Any] = Field(default_factory=dict, description="Family parameters")


class CustomSection(BaseModel):
    """User-supplied metric and cubic form."""

    metric: List[List[str]] = Field(..., description="Metric component expressions, row-major")
    cubic: List[CubicEntry] = Field(
        default_factory=list, description="Non-zero cubic-form components"
    )


class JetOptions(BaseModel):
    """How derivatives of the chart fields are obtained."""

    strategy: Literal["analytic", "fd"] = Field(
        "analytic", description="Exact jets from expressions, or finite differences"
    )
    fd_step: float = Field(1e-3, gt=0, description="Base finite-difference step")


class ToleranceOptions(BaseModel):
    """Per-file tolerance overrides."""

    tol: Optional[float] = Field(None, gt=0)
    fd_tol: Optional[float] = Field(None, gt=0)
    quad_tol: Optional[float] = Field(None, gt=0)


class ManifoldFile(BaseModel):
    """Contents of a ``statman/1`` manifold file."""

    model_config = ConfigDict(
        populate_by_name=True,
        extra="forbid",
        json_schema_extra={
            "example": {
                "schema": "statman/1",
                "name": "poincare-half-plane",
                "dim": 2,
                "coords": ["x", "y"],
                "custom": {"metric": [["1/y^2", "0"], ["0", "1/y^2"]], "cubic": []},
                "box": [[-1.0, 1.0], [0.5, 2.0]],
            }
        },
    )

    schema_id: Literal["statman/1"] = Field("statman/1", alias="schema")
    name: str = Field(..., min_length=1)
    dim: int = Field(..., ge=2, le=6)
    coords: Optional[List[str]] = Field(None, description="Coordinate names; x1..xn by default")
    builtin: Optional[BuiltinSection] = None
    custom: Optional[CustomSection] = None
    box: Optional[List[Tuple[float, float]]] = None
    jets: JetOptions = Field(default_factory=JetOptions)
    tolerances: ToleranceOptions = Field(default_factory=ToleranceOptions)

    @model_validator(mode="after")
    def validate_sections(self):
        """Exactly one of builtin or custom, with shapes matching dim."""
        if (self.builtin is None) == (self.custom is None):
            raise ValueError("Exactly one of 'builtin' or 'custom' must be given")
        n = self.dim
        if self.coords is not None:
            if len(self.coords) != n or len(set(self.coords)) != n:
                raise ValueError(f"'coords' must list {n} distinct names")
        if self.box is not None:
            if len(self.box) != n:
                raise ValueError(f"'box' must have {n} intervals")
            if any(lo >= hi for lo, hi in self.box):
                raise ValueError("Every box interval needs lo < hi")
        if self.custom is not None:
            if len(self.custom.metric) != n or any(len(row) != n for row in self.custom.metric):
                raise ValueError(f"'custom.metric' must be a {n}x{n} matrix")
            for entry in self.custom.cubic:
                if any(not 1 <= i <= n for i in entry.indices):
                    raise ValueError(f"Cubic indices {entry.indices} outside 1..{n}")
            if self.box is None:
                raise ValueError("Custom manifolds need an explicit 'box'")
        return self

    @property
    def coordinate_names(self) -> List[str]:
        return self.coords or [f"x{i}" for i in range(1, self.dim + 1)]


class ModelSpec(BaseModel):
    """A built-in model family with parameters, as used by the model service."""

    family: Family
    params: Dict[str, Any] = Field(default_factory=dict)
    box: Optional[List[Tuple[float, float]]] = None
    strategy: Literal["analytic", "fd"] = "analytic"
    fd_step: float = Field(1e-3, gt=0)
    source: Literal["closed_form", "quadrature"] = Field(
        "closed_form",
        description="Closed-form fields, or Fisher metric and cubic form by quadrature",
    )
    quad_tol: Optional[float] = Field(
        None, gt=0, description="Quadrature tolerance (defaults to settings.quad_tol)"
    )
