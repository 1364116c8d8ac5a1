"""Classification checks, curvature fits and sampled theorem verification.

Every check reduces to a worst defect over sample points and a verdict with
hysteresis: ``pass`` when defect <= tol, ``fail`` when defect >= h * tol,
otherwise ``inconclusive``.
"""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from statman.config import settings
from statman.exceptions import ConsistencyError, DegenerateFit
from statman.models.report_models import (
    AlphaScanReport,
    AlphaScanRow,
    CheckResult,
    DiagnosticsReport,
    FitResult,
    IdentityResult,
    TheoremReport,
    ValidationReport,
)
from statman.services.curvature_service import (
    DERIVATIVE,
    CurvatureState,
    curvature_state,
    identity_defects,
    projective_pack,
)
from statman.services.structure_service import (
    Chart,
    alpha_chart,
    connection_field,
    dual_chart,
    validate_statistical,
)
from statman.utils.sampling import sweep
from statman.utils.tensor_core import (
    Tensor,
    max_norm,
    rel_defect,
    symmetrize,
    wedge_identity,
)

logger = logging.getLogger(__name__)

DERIVATIVE_TIER_FACTOR = 10.0
FIT_CONNECTIONS = ("nabla", "nabla_star", "levi_civita")

Points = Sequence[Sequence[float]]


def classify(defect: float, tol: float, hysteresis: Optional[float] = None) -> str:
    """Three-way verdict for a defect."""
    hysteresis = settings.hysteresis if hysteresis is None else hysteresis
    if defect <= tol:
        return "pass"
    if defect >= hysteresis * tol:
        return "fail"
    return "inconclusive"


def conjunction(verdicts: Iterable[str]) -> str:
    """Three-valued AND: any fail wins, then any inconclusive."""
    verdicts = ["fail" if v in ("not_equiaffine",) else v for v in verdicts]
    if "fail" in verdicts:
        return "fail"
    if "inconclusive" in verdicts:
        return "inconclusive"
    return "pass"


def agreement(verdicts: Sequence[str]) -> str:
    """'agree' when all verdicts are conclusive and equal."""
    if any(v == "inconclusive" for v in verdicts):
        return "inconclusive"
    return "agree" if len(set(verdicts)) == 1 else "disagree"


def _states(chart: Chart, points: Points) -> List[CurvatureState]:
    return sweep(lambda p: curvature_state(chart, p), [np.asarray(p, dtype=float) for p in points])


def _worst(defects: Sequence[float]) -> float:
    return float(max(defects)) if defects else 0.0


def _result(
    name: str, defect: float, tol: float, points: int, details: Optional[Dict] = None
) -> CheckResult:
    verdict = classify(defect, tol)
    return CheckResult(
        name=name,
        verdict=verdict,
        passed=verdict == "pass",
        defect=float(defect),
        tol=tol,
        points_tested=points,
        details=details or {},
    )


def _require_consistent(name: str, verdicts: Dict[str, str]) -> None:
    values = set(verdicts.values())
    if "pass" in values and "fail" in values:
        raise ConsistencyError(
            f"Equivalent formulations of {name} disagree", {"verdicts": verdicts}
        )


def check_conjugate_nabla(chart: Chart, points: Points, tol: float) -> CheckResult:
    """
    nabla = nabla_star, measured as max |C| (absolute).

    K is measured alongside in its lowered form 2 g(K(X,Y),Z) = -C(X,Y,Z),
    so both readings share one scale. max |K| is reported as well.
    """
    states = _states(chart, points)
    defect_C = _worst([max_norm(s.C) for s in states])
    defect_K = _worst([2.0 * max_norm(np.einsum("lw,ljk->jkw", s.g, s.K)) for s in states])
    details = {
        "max_abs_C": defect_C,
        "max_abs_K": _worst([max_norm(s.K) for s in states]),
        "max_abs_2gK": defect_K,
        "K_verdict": classify(defect_K, tol),
    }
    if classify(defect_C, tol) != details["K_verdict"]:
        logger.warning(
            f"{chart.label}: |C| and |2gK| classify differently ({defect_C:.3e} vs {defect_K:.3e})"
        )
    return _result("conjugate_nabla", defect_C, tol, len(states), details)


def _conjugate_R_defects(s: CurvatureState) -> Dict[str, float]:
    """
    Each formulation as a (0,4) array equal to g(R - R*) up to sign and
    index order, all divided by the same curvature scale.
    """
    R04, Rs04 = s.lower(s.R), s.lower(s.R_star)
    scale = max(1.0, max_norm(R04), max_norm(Rs04))
    forms = {
        "R_equals_R_star": R04 - Rs04,
        "nabla_C_totally_symmetric": np.swapaxes(s.nabla_C, 0, 1) - s.nabla_C,
        "nabla_hat_C_totally_symmetric": np.swapaxes(s.nabla_hat_C, 0, 1) - s.nabla_hat_C,
        "nabla_hat_K_symmetric": 2.0 * s.lower(s.alt_hat),
        "g(R)_antisymmetric_in_Z_W": R04 + np.swapaxes(R04, 2, 3),
    }
    return {name: max_norm(form) / scale for name, form in forms.items()}


def check_conjugate_R(chart: Chart, points: Points, tol: float) -> CheckResult:
    """
    Conjugate symmetry R = R*, with its four equivalent formulations.

    Raises:
        ConsistencyError: If the five formulations mix pass and fail
    """
    states = _states(chart, points)
    per_point = [_conjugate_R_defects(s) for s in states]
    names = list(per_point[0]) if per_point else []
    worst = {name: _worst([d[name] for d in per_point]) for name in names}
    verdicts = {name: classify(value, tol) for name, value in worst.items()}
    _require_consistent("conjugate symmetry", verdicts)
    details: Dict = dict(worst)
    details["verdicts"] = verdicts
    return _result("conjugate_symmetric", _worst(list(worst.values())), tol, len(states), details)


def _conjugate_Ric_defects(s: CurvatureState) -> Tuple[float, float]:
    # Ric - Ric* = 2 (div K - nabla_hat tau)
    scale = max(1.0, max_norm(s.Ric), max_norm(s.Ric_star))
    return (
        max_norm(s.Ric - s.Ric_star) / scale,
        2.0 * max_norm(s.div_K_hat - s.nabla_hat_tau) / scale,
    )


def check_conjugate_Ric(chart: Chart, points: Points, tol: float) -> CheckResult:
    """
    Ric = Ric*, also measured as div K = nabla_hat tau.

    Raises:
        ConsistencyError: If the two formulations mix pass and fail
    """
    states = _states(chart, points)
    per_point = [_conjugate_Ric_defects(s) for s in states]
    defect_ric = _worst([d[0] for d in per_point])
    defect_div = _worst([d[1] for d in per_point])
    verdicts = {
        "Ric_equals_Ric_star": classify(defect_ric, tol),
        "div_K_equals_nabla_hat_tau": classify(defect_div, tol),
    }
    _require_consistent("Ricci conjugate symmetry", verdicts)
    details = {
        "Ric_equals_Ric_star": defect_ric,
        "div_K_equals_nabla_hat_tau": defect_div,
        "verdicts": verdicts,
    }
    return _result("ricci_conjugate_symmetric", max(defect_ric, defect_div), tol, len(states), details)


def check_trace_free(chart: Chart, points: Points, tol: float) -> CheckResult:
    """tau = tr K vanishes, measured as max |tau| (absolute)."""
    states = _states(chart, points)
    return _result("trace_free", _worst([max_norm(s.tau) for s in states]), tol, len(states))


def implication_chain(chart: Chart, points: Points, tol: float) -> CheckResult:
    """
    conj-R implies conj-Ric implies symmetric Ric (and Ric*).

    Raises:
        ConsistencyError: If a definite pass implies a definite fail
    """
    states = _states(chart, points)
    defects = {"conjugate_R": 0.0, "conjugate_Ric": 0.0, "Ric_symmetric": 0.0}
    for s in states:
        # one curvature scale; a Ricci entry sums dim entries of R
        scale = max(1.0, max_norm(s.R), max_norm(s.R_star))
        ric_scale = s.dim * scale
        current = {
            "conjugate_R": max_norm(s.R - s.R_star) / scale,
            "conjugate_Ric": max_norm(s.Ric - s.Ric_star) / ric_scale,
            "Ric_symmetric": max(max_norm(s.Ric - s.Ric.T), max_norm(s.Ric_star - s.Ric_star.T))
            / ric_scale,
        }
        defects = {name: max(defects[name], float(value)) for name, value in current.items()}
    verdicts = {name: classify(value, tol) for name, value in defects.items()}
    chain = list(verdicts.values())
    for earlier, later in zip(chain, chain[1:]):
        if earlier == "pass" and later == "fail":
            raise ConsistencyError("Implication chain violated", {"verdicts": verdicts})
    details: Dict = dict(defects)
    details["verdicts"] = verdicts
    return CheckResult(
        name="implication_chain",
        verdict="pass",
        passed=True,
        defect=0.0,
        tol=tol,
        points_tested=len(states),
        details=details,
    )


def _fit_target(chart: Chart, conn: str) -> Tuple[Chart, str]:
    if conn not in FIT_CONNECTIONS:
        raise ValueError(f"Unknown connection {conn!r}; expected one of {FIT_CONNECTIONS}")
    if conn == "nabla_star":
        return dual_chart(chart), "R"
    if conn == "levi_civita":
        return chart, "R_hat"
    return chart, "R"


def fit_constant_curvature(
    chart: Chart, points: Points, tol: float, conn: str = "nabla"
) -> FitResult:
    """
    Least-squares k in R = k T, T(X,Y)Z = g(Y,Z)X - g(X,Z)Y, at each point.

    The residual is the worse of the pointwise relative residual and the
    peak-to-peak spread of k over the points relative to max(1, |k|).

    Raises:
        DegenerateFit: If <T,T> vanishes at a point
    """
    target, attribute = _fit_target(chart, conn)
    states = _states(target, points)
    k_values: List[float] = []
    pointwise = 0.0
    for s in states:
        T = wedge_identity(s.g)
        R = getattr(s, attribute)
        norm = float(np.sum(T * T))
        if norm <= 1e-24:
            raise DegenerateFit("Model tensor has vanishing norm", {"point": s.point.tolist()})
        k = float(np.sum(R * T)) / norm
        k_values.append(k)
        pointwise = max(pointwise, max_norm(R - k * T) / max(1.0, max_norm(R)))
    k_mean = float(np.mean(k_values)) if k_values else 0.0
    # largest |k_p - k_q| over pairs of points
    spread = float(np.ptp(k_values)) / max(1.0, abs(k_mean)) if k_values else 0.0
    residual = max(pointwise, spread)
    verdict = classify(residual, tol)
    logger.debug(f"{chart.label}: fitted k={k_mean:.6g} for {conn}, residual {residual:.3e}")
    return FitResult(
        conn=conn,
        k=k_mean,
        residual=residual,
        pointwise_residual=pointwise,
        spread=spread,
        k_values=k_values,
        verdict=verdict,
        passed=verdict == "pass",
        tol=tol,
        points_tested=len(states),
    )


def check_projectively_flat(
    chart: Chart, points: Points, tol: float, conn: str = "nabla"
) -> CheckResult:
    """
    Projective flatness of an equiaffine connection.

    Requires a symmetric Ricci tensor; otherwise the verdict is
    ``not_equiaffine``. For n >= 3 the projective curvature must vanish
    (relative to R). For n = 2 nabla Ric must be totally symmetric, compared
    with a tenfold tolerance.
    """
    target, _ = _fit_target(chart, conn)
    field = connection_field(target, "levi_civita" if conn == "levi_civita" else "nabla")
    packs = sweep(lambda p: projective_pack(field, p), [np.asarray(p, dtype=float) for p in points])
    name = f"projectively_flat_{conn}"
    ric_defect = _worst([rel_defect(p.Ric, p.Ric.T) for p in packs])
    precondition = classify(ric_defect, tol)
    details: Dict = {"Ric_symmetric": ric_defect}
    if precondition != "pass":
        verdict = "not_equiaffine" if precondition == "fail" else "inconclusive"
        return CheckResult(
            name=name,
            verdict=verdict,
            passed=False,
            defect=ric_defect,
            tol=tol,
            points_tested=len(packs),
            details=details,
        )
    nabla_ric_defect = _worst(
        [rel_defect(p.nabla_Ric, symmetrize(Tensor.of(p.nabla_Ric, "lll")).components) for p in packs]
    )
    details["nabla_Ric_totally_symmetric"] = nabla_ric_defect
    n = chart.dim
    if n >= 3:
        defect = _worst([rel_defect(p.R, wedge_identity(p.schouten)) for p in packs])
        details["projective_curvature"] = defect
        return _result(name, defect, tol, len(packs), details)
    effective = tol * DERIVATIVE_TIER_FACTOR
    return _result(name, nabla_ric_defect, effective, len(packs), details)


def diagnose(chart: Chart, points: Points, tol: float, alpha: Optional[float] = None) -> DiagnosticsReport:
    """All classification checks and fits for one chart (or its alpha-chart)."""
    target = chart if alpha is None else alpha_chart(chart, alpha)
    checks = [
        check_conjugate_nabla(target, points, tol),
        check_conjugate_R(target, points, tol),
        check_conjugate_Ric(target, points, tol),
        check_trace_free(target, points, tol),
        check_projectively_flat(target, points, tol, "nabla"),
        check_projectively_flat(target, points, tol, "nabla_star"),
        implication_chain(target, points, tol),
    ]
    fits = [fit_constant_curvature(target, points, tol, conn) for conn in FIT_CONNECTIONS]
    return DiagnosticsReport(label=target.label, alpha=alpha, checks=checks, fits=fits)


def _effective_tol(tier: str, tol: float) -> float:
    return tol * DERIVATIVE_TIER_FACTOR if tier == DERIVATIVE else tol


def run_identity_suite(
    chart: Chart, points: Points, tol: float, alphas: Optional[Sequence[float]] = None
) -> List[IdentityResult]:
    """
    Every curvature identity over all sample points, worst first.

    Returns:
        One result per identity, sorted by defect / tolerance descending
    """
    per_point = sweep(
        lambda p: identity_defects(chart, p, alphas), [np.asarray(p, dtype=float) for p in points]
    )
    worst: Dict[str, Tuple[float, int, str]] = {}
    for index, defects in enumerate(per_point):
        for item in defects:
            current = worst.get(item.name)
            if current is None or item.defect > current[0]:
                worst[item.name] = (item.defect, index, item.tier)
    results = []
    for name, (defect, index, tier) in worst.items():
        effective = _effective_tol(tier, tol)
        verdict = classify(defect, effective)
        results.append(
            IdentityResult(
                name=name,
                tier=tier,
                max_defect=defect,
                tol=effective,
                verdict=verdict,
                passed=verdict == "pass",
                worst_point_index=index,
            )
        )
    results.sort(key=lambda r: (-r.max_defect / r.tol, r.name))
    return results


def verify_theorem_charactconst(chart: Chart, points: Points, tol: float) -> TheoremReport:
    """
    Constant curvature of nabla versus conjugate symmetry plus projective
    flatness of nabla_star, sampled.

    When constant curvature passes, Ric = (n - 1) k g is measured too.
    """
    fit = fit_constant_curvature(chart, points, tol, "nabla")
    conj = check_conjugate_R(chart, points, tol)
    flat_star = check_projectively_flat(chart, points, tol, "nabla_star")
    side_b = conjunction([conj.verdict, flat_star.verdict])
    verdicts = {
        "constant_curvature": fit.verdict,
        "conjugate_symmetric": conj.verdict,
        "projectively_flat_nabla_star": flat_star.verdict,
        "A": fit.verdict,
        "B": side_b,
    }
    details: Dict = {"fit_residual": fit.residual}
    if fit.verdict == "pass":
        n = chart.dim
        details["Ric_equals_(n-1)kg"] = _worst(
            [rel_defect(s.Ric, (n - 1) * fit.k * s.g) for s in _states(chart, points)]
        )
    return TheoremReport(
        theorem="constant curvature characterization",
        status="sampled",
        hypothesis_met=True,
        verdicts=verdicts,
        agreement=agreement([fit.verdict, side_b]),
        k=fit.k,
        details=details,
    )


def verify_theorem_charactconst2(chart: Chart, points: Points, tol: float) -> TheoremReport:
    """
    For trace-free statistical manifolds: constant curvature, conjugate
    symmetry plus projective flatness of nabla_star, and Ricci conjugate
    symmetry plus projective flatness of nabla_star all agree.
    """
    trace = check_trace_free(chart, points, tol)
    if trace.verdict != "pass":
        return TheoremReport(
            theorem="trace-free constant curvature characterization",
            status="hypothesis_not_met",
            hypothesis_met=False,
            verdicts={"trace_free": trace.verdict},
            agreement="not_applicable",
            details={"max_abs_tau": trace.defect},
        )
    fit = fit_constant_curvature(chart, points, tol, "nabla")
    conj = check_conjugate_R(chart, points, tol)
    conj_ric = check_conjugate_Ric(chart, points, tol)
    flat_star = check_projectively_flat(chart, points, tol, "nabla_star")
    side_b = conjunction([conj.verdict, flat_star.verdict])
    side_c = conjunction([conj_ric.verdict, flat_star.verdict])
    return TheoremReport(
        theorem="trace-free constant curvature characterization",
        status="sampled",
        hypothesis_met=True,
        verdicts={
            "trace_free": trace.verdict,
            "A": fit.verdict,
            "B": side_b,
            "C": side_c,
        },
        agreement=agreement([fit.verdict, side_b, side_c]),
        k=fit.k,
        details={"fit_residual": fit.residual},
    )


def alpha_scan(
    chart: Chart, alphas: Sequence[float], points: Points, tol: float
) -> AlphaScanReport:
    """
    Conjugate symmetry and constant curvature of each alpha-connection.

    Conjugate symmetry is hereditary along alpha. When the metric is not of
    constant curvature but alpha = 1 is conjugate symmetric of constant
    curvature, no alpha other than +-1 may fit a constant curvature.
    """
    metric_fit = fit_constant_curvature(chart, points, tol, "levi_civita")
    g_not_cc = metric_fit.verdict == "fail"
    rows = []
    for alpha in alphas:
        target = alpha_chart(chart, alpha)
        conj = check_conjugate_R(target, points, tol)
        fit = fit_constant_curvature(target, points, tol, "nabla")
        rows.append(
            AlphaScanRow(
                alpha=float(alpha),
                conj_r_pass=conj.passed,
                conj_r_verdict=conj.verdict,
                k_fit=fit.k,
                residual=fit.residual,
                constant_curvature_pass=fit.passed,
                constant_curvature_verdict=fit.verdict,
                hypothesis_g_not_cc=g_not_cc,
            )
        )
    base_conj = check_conjugate_R(chart, points, tol)
    heredity: Optional[bool] = None
    if base_conj.passed:
        heredity = all(row.conj_r_pass for row in rows)
    base_fit = fit_constant_curvature(chart, points, tol, "nabla")
    applies = g_not_cc and base_conj.passed and base_fit.passed
    consistent: Optional[bool] = None
    if applies:
        consistent = not any(
            row.constant_curvature_pass for row in rows if abs(row.alpha) != 1.0
        )
    logger.info(f"{chart.label}: alpha scan over {len(rows)} values, heredity={heredity}")
    return AlphaScanReport(
        label=chart.label,
        metric_k=metric_fit.k,
        hypothesis_g_not_cc=g_not_cc,
        rows=rows,
        heredity_holds=heredity,
        proposition_applies=applies,
        proposition_consistent=consistent,
    )


class DiagnosticsService:
    """Service running the sampled checks of one chart."""

    def __init__(self, chart: Chart, points: Points, tol: float):
        """
        Initialize diagnostics service.

        Args:
            chart: Chart under test
            points: Sample points shared by every check
            tol: Relative tolerance for analytic checks
        """
        self.chart = chart
        self.points = points
        self.tol = tol

    def check(
        self, alphas: Optional[Sequence[float]] = None
    ) -> Tuple[ValidationReport, List[IdentityResult], Optional[DiagnosticsReport]]:
        """
        Validate the structure, then run the identity suite and classify.

        Curvature checks are skipped when validation finds a violation.

        Returns:
            Validation report, identity results (worst first) and diagnostics,
            the last two empty when validation fails
        """
        validation = validate_statistical(self.chart, self.points, self.tol, alphas)
        if not validation.passed:
            logger.warning(
                f"{self.chart.label}: not a statistical manifold; skipping curvature checks"
            )
            return validation, [], None
        identities = run_identity_suite(self.chart, self.points, self.tol, alphas)
        return validation, identities, diagnose(self.chart, self.points, self.tol)

    def scan(self, alphas: Sequence[float]) -> AlphaScanReport:
        """Conjugate symmetry and constant curvature along the alpha family."""
        return alpha_scan(self.chart, alphas, self.points, self.tol)

    def theorems(self) -> List[TheoremReport]:
        """Both constant-curvature characterizations, in order."""
        return [
            verify_theorem_charactconst(self.chart, self.points, self.tol),
            verify_theorem_charactconst2(self.chart, self.points, self.tol),
        ]
