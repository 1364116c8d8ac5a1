"""Pydantic models for check results and report documents."""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

SCHEMA_ID = "statman/1"

Verdict = Literal["pass", "fail", "inconclusive", "not_equiaffine", "hypothesis_not_met"]
Agreement = Literal["agree", "disagree", "inconclusive", "not_applicable"]


class Violation(BaseModel):
    """One failed structural condition at one sample point."""

    name: str = Field(..., description="Condition that failed")
    point_index: int = Field(..., ge=0, description="Index of the sample point")
    point: List[float] = Field(..., description="Coordinates of the sample point")
    defect: Optional[float] = Field(None, description="Measured relative defect")
    message: str = Field("", description="Human-readable explanation")


class ValidationReport(BaseModel):
    """Outcome of validating that a chart describes a statistical manifold."""

    label: str = Field(..., description="Chart label")
    passed: bool = Field(..., description="True when no violation was found")
    tol: float = Field(..., gt=0, description="Relative tolerance applied")
    points_tested: int = Field(..., ge=0, description="Number of sample points")
    violations: List[Violation] = Field(default_factory=list)
    max_defects: Dict[str, float] = Field(
        default_factory=dict, description="Worst defect per condition"
    )


class CheckResult(BaseModel):
    """A classification check over sample points."""

    name: str = Field(..., description="Check name")
    verdict: Verdict = Field(..., description="Hysteresis verdict")
    passed: bool = Field(..., description="True only for a 'pass' verdict")
    defect: float = Field(..., ge=0, description="Worst defect over sample points")
    tol: float = Field(..., gt=0, description="Tolerance the defect was compared with")
    points_tested: int = Field(..., ge=0)
    fitted_constants: Optional[Dict[str, float]] = Field(None)
    details: Dict[str, Any] = Field(
        default_factory=dict, description="Sub-defects and sub-verdicts"
    )

    model_config = {
        "json_schema_extra": {
            "example": {
                "name": "conjugate_symmetric",
                "verdict": "pass",
                "passed": True,
                "defect": 3.1e-15,
                "tol": 1e-8,
                "points_tested": 20,
                "fitted_constants": None,
                "details": {"R_equals_R_star": 3.1e-15},
            }
        }
    }


class FitResult(BaseModel):
    """Least-squares fit of a constant sectional curvature."""

    conn: str = Field(..., description="Connection whose curvature was fitted")
    k: float = Field(..., description="Mean fitted curvature")
    residual: float = Field(
        ..., ge=0, description="max(pointwise residual, spread of k over points)"
    )
    pointwise_residual: float = Field(..., ge=0)
    spread: float = Field(..., ge=0, description="max |k_p - k| / max(1, |k|)")
    k_values: List[float] = Field(default_factory=list, description="Per-point fits")
    verdict: Verdict = Field(...)
    passed: bool = Field(...)
    tol: float = Field(..., gt=0)
    points_tested: int = Field(..., ge=0)


class IdentityResult(BaseModel):
    """Worst defect of one algebraic or differential identity."""

    name: str = Field(..., description="Identity name")
    tier: Literal["analytic", "derivative"] = Field(
        ..., description="Derivative-tier identities get a tenfold tolerance"
    )
    max_defect: float = Field(..., ge=0)
    tol: float = Field(..., gt=0)
    verdict: Verdict = Field(...)
    passed: bool = Field(...)
    worst_point_index: int = Field(..., ge=0)


class TheoremReport(BaseModel):
    """Sampled agreement between the two sides of a characterization."""

    theorem: str = Field(..., description="Characterization name")
    status: Literal["sampled", "hypothesis_not_met"] = Field(...)
    hypothesis_met: bool = Field(...)
    verdicts: Dict[str, str] = Field(
        default_factory=dict, description="Verdict per statement"
    )
    agreement: Agreement = Field(...)
    k: Optional[float] = Field(None, description="Fitted curvature when applicable")
    details: Dict[str, Any] = Field(default_factory=dict)


class AlphaScanRow(BaseModel):
    """Diagnostics of one alpha-connection."""

    alpha: float
    conj_r_pass: bool
    conj_r_verdict: Verdict
    k_fit: float
    residual: float = Field(..., ge=0)
    constant_curvature_pass: bool
    constant_curvature_verdict: Verdict
    hypothesis_g_not_cc: bool = Field(
        ..., description="The metric itself is definitely not of constant curvature"
    )


class AlphaScanReport(BaseModel):
    """Scan of conjugate symmetry and constant curvature along alpha."""

    label: str
    metric_k: float = Field(..., description="Fitted curvature of the Levi-Civita connection")
    hypothesis_g_not_cc: bool
    rows: List[AlphaScanRow] = Field(default_factory=list)
    heredity_holds: Optional[bool] = Field(
        None,
        description="Conjugate symmetry at alpha = 1 carried to every scanned alpha; "
        "None when alpha = 1 is not conjugate symmetric",
    )
    proposition_applies: bool = Field(
        ..., description="Metric not of constant curvature, alpha = 1 conjugate symmetric of constant curvature"
    )
    proposition_consistent: Optional[bool] = Field(
        None, description="No scanned alpha other than +-1 fitted a constant curvature"
    )


class DiagnosticsReport(BaseModel):
    """All classification checks for one connection."""

    label: str
    alpha: Optional[float] = None
    checks: List[CheckResult] = Field(default_factory=list)
    fits: List[FitResult] = Field(default_factory=list)


class ManifoldMetadata(BaseModel):
    """What was checked."""

    name: str
    dim: int = Field(..., ge=2)
    coords: List[str]
    family: str
    strategy: Literal["analytic", "finite-difference"]
    box: List[Tuple[float, float]]


class ReportDocument(BaseModel):
    """Top-level JSON document written by the command-line tool."""

    model_config = ConfigDict(populate_by_name=True)

    schema_id: Literal["statman/1"] = Field(SCHEMA_ID, alias="schema")
    tool_version: str
    command: Literal["check", "alpha-scan", "verify-theorems"]
    manifold: ManifoldMetadata
    seed: int
    points: int = Field(..., ge=1)
    tol: float = Field(..., gt=0)
    validation: Optional[ValidationReport] = None
    identities: List[IdentityResult] = Field(default_factory=list)
    diagnostics: Optional[DiagnosticsReport] = None
    theorems: List[TheoremReport] = Field(default_factory=list)
    alpha_scan: Optional[AlphaScanReport] = None
    exit_code: int = Field(0, ge=0, le=3)
