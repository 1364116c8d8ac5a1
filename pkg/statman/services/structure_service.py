"""Charts, connections and the structural checks of a statistical manifold.

A chart carries the metric g and the cubic form C = nabla g as scalar fields.
Every connection is derived from them:

    K^k_ij      = -1/2 g^kl C_ijl
    nabla       = levi-civita + K
    nabla_star  = levi-civita - K
    nabla_alpha = levi-civita + alpha K
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from statman.config import settings
from statman.exceptions import (
    DimensionError,
    DomainError,
    ShapeError,
    SingularMetric,
    StatmanException,
)
from statman.models.report_models import ValidationReport, Violation
from statman.utils.jets import MAX_ORDER, Jet, ScalarField, ScaledField, as_point
from statman.utils.tensor_core import (
    Tensor,
    ensure_invertible,
    rel_defect,
    symmetry_defect,
)

logger = logging.getLogger(__name__)

CONNECTION_KINDS = ("levi_civita", "nabla", "nabla_star", "alpha")
_KIND_ALPHA = {"levi_civita": 0.0, "nabla": 1.0, "nabla_star": -1.0}


@dataclass(frozen=True, eq=False)
class Chart:
    """Coordinate chart with metric and cubic-form fields.

    ``metric_field[i][j]`` and ``cubic_field[i][j][k]`` may share field
    objects across symmetric slots; shared objects are evaluated once.
    """

    dim: int
    coords: Tuple[str, ...]
    metric_field: Tuple[Tuple[ScalarField, ...], ...]
    cubic_field: Tuple[Tuple[Tuple[ScalarField, ...], ...], ...]
    label: str = "chart"
    box: Optional[Tuple[Tuple[float, float], ...]] = None
    family: str = "custom"

    def __post_init__(self):
        if self.dim < 2:
            raise DimensionError(f"Charts need dimension >= 2, got {self.dim}")
        n = self.dim
        if len(self.coords) != n:
            raise ShapeError(f"Expected {n} coordinate names, got {len(self.coords)}")
        if len(self.metric_field) != n or any(len(row) != n for row in self.metric_field):
            raise ShapeError(f"Metric fields must form a {n}x{n} grid")
        if len(self.cubic_field) != n or any(
            len(row) != n or any(len(col) != n for col in row) for row in self.cubic_field
        ):
            raise ShapeError(f"Cubic fields must form a {n}x{n}x{n} grid")

    @property
    def strategy(self) -> str:
        fields = [f for row in self.metric_field for f in row] + [
            f for plane in self.cubic_field for row in plane for f in row
        ]
        if any(f.strategy == "finite-difference" for f in fields):
            return "finite-difference"
        return "analytic"

    def metric_jet(self, point: np.ndarray, order: int = MAX_ORDER) -> Jet:
        return _grid_jet(self.metric_field, point, order, (self.dim, self.dim))

    def cubic_jet(self, point: np.ndarray, order: int = MAX_ORDER - 1) -> Jet:
        flat = [row for plane in self.cubic_field for row in plane]
        return _grid_jet(flat, point, order, (self.dim,) * 3)

    def with_cubic_factor(self, factor: float, label: str) -> "Chart":
        """Same metric, cubic form multiplied by ``factor``."""
        cubic = tuple(
            tuple(tuple(ScaledField(f, factor) for f in row) for row in plane)
            for plane in self.cubic_field
        )
        return Chart(
            dim=self.dim,
            coords=self.coords,
            metric_field=self.metric_field,
            cubic_field=_share_symmetric(cubic, self.cubic_field),
            label=label,
            box=self.box,
            family=self.family,
        )


def _share_symmetric(scaled, original):
    """Reuse one wrapper per distinct original field so sharing survives scaling."""
    wrappers: Dict[int, ScalarField] = {}
    result = []
    for plane_s, plane_o in zip(scaled, original):
        rows = []
        for row_s, row_o in zip(plane_s, plane_o):
            rows.append(
                tuple(wrappers.setdefault(id(o), s) for s, o in zip(row_s, row_o))
            )
        result.append(tuple(rows))
    return tuple(result)


def _grid_jet(rows, point: np.ndarray, order: int, shape: Tuple[int, ...]) -> Jet:
    cache: Dict[int, Jet] = {}
    jets = []
    for row in rows:
        for field in row:
            key = id(field)
            if key not in cache:
                cache[key] = field.jet(point, order)
            jets.append(cache[key])
    result = Jet.stack(jets, shape)
    if not result.is_finite():
        raise DomainError("Chart fields are not finite at point", {"point": point.tolist()})
    return result


def symmetric_grid(entries: Dict[Tuple[int, ...], ScalarField], dim: int, rank: int, zero: ScalarField):
    """
    Build a nested tuple grid from entries on sorted index tuples.

    Args:
        entries: Field per sorted 0-based index tuple
        dim: Chart dimension
        rank: 2 for a metric, 3 for a cubic form
        zero: Field used for missing entries

    Returns:
        Nested tuples with the same field object at every permutation
    """

    def build(prefix: Tuple[int, ...]):
        if len(prefix) == rank:
            return entries.get(tuple(sorted(prefix)), zero)
        return tuple(build(prefix + (i,)) for i in range(dim))

    return build(())


@dataclass(frozen=True, eq=False)
class LocalGeometry:
    """Jets of the basic objects at one point.

    Orders: metric 3, metric_inv 3, cubic 2, gamma_hat 2, difference 2.
    """

    point: np.ndarray
    metric: Jet
    metric_inv: Jet
    cubic: Jet
    gamma_hat: Jet
    difference: Jet


def local_geometry(chart: Chart, point: Sequence[float]) -> LocalGeometry:
    """
    Metric, cubic form, Levi-Civita symbols and difference tensor at a point.

    Raises:
        DomainError: If a field is undefined at the point
        SingularMetric: If the metric is not invertible there
    """
    point = as_point(point)
    if point.shape[0] != chart.dim:
        raise DimensionError(
            f"Point has {point.shape[0]} coordinates, chart has dimension {chart.dim}"
        )
    return _local_geometry(chart, tuple(point.tolist()))


@lru_cache(maxsize=4096)
def _local_geometry(chart: Chart, key: Tuple[float, ...]) -> LocalGeometry:
    point = np.asarray(key)
    g = chart.metric_jet(point, MAX_ORDER)
    ensure_invertible(g.value, settings.singular_rtol)
    g_inv = g.inverse()
    cubic = chart.cubic_jet(point, MAX_ORDER - 1)

    dg = g.derivative()  # dg[a,b,c] = d_c g_ab
    lowered = (
        Jet.einsum("jli->ijl", dg) + Jet.einsum("ilj->ijl", dg) - dg
    )  # d_i g_jl + d_j g_il - d_l g_ij
    gamma_hat = Jet.einsum("kl,ijl->kij", g_inv, lowered) * 0.5
    difference = Jet.einsum("kl,ijl->kij", g_inv, cubic) * -0.5
    return LocalGeometry(point, g, g_inv, cubic, gamma_hat, difference)


def clear_caches() -> None:
    """Drop cached per-point geometry."""
    _local_geometry.cache_clear()


@dataclass(frozen=True, eq=False)
class ConnectionCoeffs:
    """Christoffel symbols Gamma^k_ij at a point, stored as [k, i, j]."""

    gamma: Tensor
    kind: str
    alpha: Optional[float] = None


class ConnectionField(ABC):
    """A torsion-free connection over a chart, evaluated as an order-2 jet."""

    kind: str = "connection"
    alpha: Optional[float] = None

    @property
    @abstractmethod
    def chart(self) -> Chart:
        """Chart supplying the metric."""

    @abstractmethod
    def jet(self, point: Sequence[float]) -> Jet:
        """Jet of Gamma^k_ij at ``point`` to order 2."""

    def coefficients(self, point: Sequence[float]) -> ConnectionCoeffs:
        return ConnectionCoeffs(
            Tensor.of(self.jet(point).value, "ull"), self.kind, self.alpha
        )


class ChartConnection(ConnectionField):
    """levi-civita + alpha K for a chart."""

    def __init__(self, chart: Chart, alpha: float, kind: str):
        self._chart = chart
        self.alpha = float(alpha)
        self.kind = kind

    @property
    def chart(self) -> Chart:
        return self._chart

    def jet(self, point: Sequence[float]) -> Jet:
        geometry = local_geometry(self._chart, point)
        if self.alpha == 0.0:
            return geometry.gamma_hat
        return geometry.gamma_hat + geometry.difference * self.alpha


class ProjectiveTransform(ConnectionField):
    """Gamma^k_ij + rho_i delta^k_j + rho_j delta^k_i with rho = d(potential)."""

    kind = "projective"

    def __init__(self, base: ConnectionField, potential: ScalarField):
        self.base = base
        self.potential = potential

    @property
    def chart(self) -> Chart:
        return self.base.chart

    def jet(self, point: Sequence[float]) -> Jet:
        point = as_point(point)
        rho = self.potential.jet(point, MAX_ORDER).derivative()
        delta = Jet.constant(np.eye(point.shape[0]), point.shape[0], MAX_ORDER - 1)
        shift = Jet.einsum("i,kj->kij", rho, delta) + Jet.einsum("j,ki->kij", rho, delta)
        return self.base.jet(point) + shift


def connection_field(chart: Chart, kind: str = "nabla", alpha: Optional[float] = None) -> ChartConnection:
    """
    Connection of the given kind on a chart.

    Args:
        chart: Chart
        kind: levi_civita, nabla, nabla_star or alpha
        alpha: Required for kind 'alpha'
    """
    if kind not in CONNECTION_KINDS:
        raise ValueError(f"Unknown connection kind {kind!r}; expected one of {CONNECTION_KINDS}")
    if kind == "alpha":
        if alpha is None:
            raise ValueError("alpha connection needs an alpha value")
        return ChartConnection(chart, alpha, "alpha")
    return ChartConnection(chart, _KIND_ALPHA[kind], kind)


def levi_civita(chart: Chart, point: Sequence[float]) -> ConnectionCoeffs:
    """Levi-Civita symbols of the chart metric."""
    return connection_field(chart, "levi_civita").coefficients(point)


def difference_tensor(chart: Chart, point: Sequence[float]) -> Tensor:
    """K^k_ij = -1/2 g^kl C_ijl."""
    return Tensor.of(local_geometry(chart, point).difference.value, "ull")


def nabla(chart: Chart, point: Sequence[float]) -> ConnectionCoeffs:
    return connection_field(chart, "nabla").coefficients(point)


def nabla_star(chart: Chart, point: Sequence[float]) -> ConnectionCoeffs:
    return connection_field(chart, "nabla_star").coefficients(point)


def alpha_connection(chart: Chart, point: Sequence[float], alpha: float) -> ConnectionCoeffs:
    return connection_field(chart, "alpha", alpha).coefficients(point)


def cubic_from_connection(chart: Chart, point: Sequence[float], conn: ConnectionCoeffs) -> Tensor:
    """(nabla_i g)_jk = d_i g_jk - Gamma^l_ij g_lk - Gamma^l_ik g_jl."""
    geometry = local_geometry(chart, point)
    g = geometry.metric.value
    dg = geometry.metric.partials[0]
    gamma = conn.gamma.components
    components = (
        np.einsum("jki->ijk", dg)
        - np.einsum("lij,lk->ijk", gamma, g)
        - np.einsum("lik,jl->ijk", gamma, g)
    )
    return Tensor.of(components, "lll")


def dual_chart(chart: Chart) -> Chart:
    """Chart whose primal connection is this chart's dual (cubic form -C)."""
    return chart.with_cubic_factor(-1.0, f"{chart.label}*")


def alpha_chart(chart: Chart, alpha: float) -> Chart:
    """Chart whose primal connection is this chart's alpha-connection."""
    return chart.with_cubic_factor(alpha, f"{chart.label}[alpha={alpha:g}]")


def _validation_defects(
    chart: Chart, dual: Chart, point: np.ndarray, alphas: Sequence[float]
) -> Dict[str, float]:
    geometry = local_geometry(chart, point)
    g = geometry.metric.value
    g_inv = geometry.metric_inv.value
    dg = geometry.metric.partials[0]
    C = geometry.cubic.value
    K = geometry.difference.value
    gamma_hat = geometry.gamma_hat.value
    gamma = gamma_hat + K
    gamma_star = gamma_hat - K
    cubic = Tensor.of(C, "lll")

    defects = {
        "metric symmetric": rel_defect(g, g.T),
        "cubic totally symmetric": symmetry_defect(cubic),
        "torsion free": max(
            rel_defect(G, np.swapaxes(G, 1, 2)) for G in (gamma_hat, gamma, gamma_star)
        ),
        "cubic from nabla": rel_defect(
            cubic_from_connection(chart, point, ConnectionCoeffs(Tensor.of(gamma, "ull"), "nabla")),
            cubic,
        ),
        "cubic from nabla_star": rel_defect(
            cubic_from_connection(
                chart, point, ConnectionCoeffs(Tensor.of(gamma_star, "ull"), "nabla_star")
            ),
            -cubic,
        ),
        "duality": rel_defect(
            np.einsum("jki->ijk", dg),
            np.einsum("lij,lk->ijk", gamma, g) + np.einsum("lik,jl->ijk", gamma_star, g),
        ),
        "mean of dual pair": rel_defect((gamma + gamma_star) / 2, gamma_hat),
        "K self-adjoint": rel_defect(
            np.einsum("lk,lij->ijk", g, K), np.einsum("jl,lik->ijk", g, K)
        ),
        "volume form": rel_defect(
            0.5 * np.einsum("ab,abi->i", g_inv, dg) - np.einsum("mim->i", gamma),
            -np.einsum("mim->i", K),
        ),
    }
    reflection = 0.0
    for alpha in alphas:
        mine = connection_field(chart, "alpha", -alpha).jet(point).value
        theirs = connection_field(dual, "alpha", alpha).jet(point).value
        torsion = rel_defect(mine, np.swapaxes(mine, 1, 2))
        defects["torsion free"] = max(defects["torsion free"], torsion)
        reflection = max(reflection, rel_defect(mine, theirs))
    defects["alpha reflection"] = reflection
    return defects


def validate_statistical(
    chart: Chart,
    points: Sequence[Sequence[float]],
    tol: float,
    alphas: Optional[Sequence[float]] = None,
) -> ValidationReport:
    """
    Check that a chart defines a statistical manifold at every sample point.

    Violations are collected, never raised: metric invertibility, symmetric
    g and C, torsion-free connections, the duality relation, C recovered
    from nabla and nabla_star, the mean law, K self-adjointness, the volume
    form identity and the alpha reflection nabla^-alpha = (nabla*)^alpha.

    Args:
        chart: Chart to validate
        points: Sample points
        tol: Relative tolerance
        alphas: alpha grid for torsion and reflection checks

    Returns:
        ValidationReport
    """
    alphas = settings.alphas if alphas is None else alphas
    dual = dual_chart(chart)
    violations: List[Violation] = []
    max_defects: Dict[str, float] = {}
    for index, point in enumerate(points):
        point = np.asarray(point, dtype=float)
        try:
            defects = _validation_defects(chart, dual, point, alphas)
        except SingularMetric as e:
            violations.append(
                Violation(name="metric invertible", point_index=index, point=point.tolist(), message=e.message)
            )
            continue
        except StatmanException as e:
            violations.append(
                Violation(name="evaluation", point_index=index, point=point.tolist(), message=e.message)
            )
            continue
        for name, defect in defects.items():
            max_defects[name] = max(max_defects.get(name, 0.0), float(defect))
            if defect > tol:
                violations.append(
                    Violation(
                        name=name,
                        point_index=index,
                        point=point.tolist(),
                        defect=float(defect),
                        message=f"{name} defect {defect:.3e} exceeds {tol:.1e}",
                    )
                )
    if violations:
        logger.info(f"{chart.label}: {len(violations)} structural violations")
    return ValidationReport(
        label=chart.label,
        passed=not violations,
        tol=tol,
        points_tested=len(points),
        violations=violations,
        max_defects=max_defects,
    )
