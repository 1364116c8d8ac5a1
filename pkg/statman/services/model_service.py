"""Built-in model families, manifold files and Fisher quantities by quadrature."""

import json
import logging
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.special import digamma, gammaln, roots_hermite, roots_legendre

from statman.config import settings
from statman.exceptions import ManifoldFileError, ParamError, ParseError, QuadratureError
from statman.models.manifold_models import CustomSection, ManifoldFile, ModelSpec
from statman.services.structure_service import Chart, symmetric_grid
from statman.utils.expression import Expression, ExpressionField, parse_expression
from statman.utils.jets import ConstantField, FiniteDifferenceField, ScalarField, as_point
from statman.utils.tensor_core import Tensor

logger = logging.getLogger(__name__)

ZERO = ConstantField(0.0)


# Log-likelihoods and quadrature


class LogLikelihood(ABC):
    """Score function of a two-parameter family and a quadrature rule for its density."""

    dim = 2

    @abstractmethod
    def check(self, theta: np.ndarray) -> None:
        """Raise ParamError outside the parameter domain."""

    @abstractmethod
    def rule(self, theta: np.ndarray, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
        """Sample values and weights integrating against the density at theta."""

    @abstractmethod
    def score(self, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """d log p / d theta at each sample value, shape (N, dim)."""


class NormalLogLikelihood(LogLikelihood):
    """N(mu, sigma^2) in (mu, sigma); Gauss-Hermite nodes."""

    def check(self, theta):
        if theta[1] <= 0:
            raise ParamError(f"Normal family needs sigma > 0, got {theta[1]}")

    def rule(self, theta, nodes):
        mu, sigma = theta
        t, w = roots_hermite(nodes)
        return mu + math.sqrt(2.0) * sigma * t, w / math.sqrt(math.pi)

    def score(self, x, theta):
        mu, sigma = theta
        z = x - mu
        return np.stack([z / sigma**2, (z * z - sigma**2) / sigma**3], axis=1)


class GammaLogLikelihood(LogLikelihood):
    """
    Gamma(shape k, rate beta), integrated in u = log(beta x).

    The density of u is exp(k u - e^u) / Gamma(k); Gauss-Legendre nodes on a
    window around its mode avoid the log singularity of the score at x = 0.
    """

    def __init__(self, chart: str = "shape_rate"):
        if chart not in ("shape_rate", "natural"):
            raise ParamError(f"Unknown gamma chart {chart!r}")
        self.chart = chart

    def shape_rate(self, theta: np.ndarray) -> Tuple[float, float]:
        if self.chart == "natural":
            return float(theta[0]) + 1.0, -float(theta[1])
        return float(theta[0]), float(theta[1])

    def check(self, theta):
        k, beta = self.shape_rate(theta)
        if k <= 0 or beta <= 0:
            raise ParamError(f"Gamma family needs k > 0 and beta > 0, got k={k}, beta={beta}")

    def rule(self, theta, nodes):
        k, _ = self.shape_rate(theta)
        lower = math.log(k) - 40.0 / k - 2.0
        upper = math.log(k) + 6.0
        t, w = roots_legendre(nodes)
        half = 0.5 * (upper - lower)
        u = lower + half * (t + 1.0)
        density = np.exp(k * u - np.exp(u) - gammaln(k))
        return u, w * half * density

    def score(self, u, theta):
        k, beta = self.shape_rate(theta)
        y = np.exp(u)
        d_shape = u - digamma(k)
        if self.chart == "natural":
            return np.stack([d_shape, (y - k) / beta], axis=1)
        return np.stack([d_shape, (k - y) / beta], axis=1)


@dataclass(frozen=True)
class FisherMoments:
    """Quadrature moments of the score at one parameter value."""

    g: Tensor
    C: Optional[Tensor]
    mean_score: np.ndarray
    mass: float
    nodes: int


def _moments(ll: LogLikelihood, theta: np.ndarray, nodes: int, order: int) -> FisherMoments:
    x, w = ll.rule(theta, nodes)
    s = ll.score(x, theta)
    g = np.einsum("a,ai,aj->ij", w, s, s)
    C = np.einsum("a,ai,aj,ak->ijk", w, s, s, s) if order >= 3 else None
    return FisherMoments(
        g=Tensor.of(g, "ll"),
        C=Tensor.of(C, "lll") if C is not None else None,
        mean_score=w @ s,
        mass=float(np.sum(w)),
        nodes=nodes,
    )


def _change(a: FisherMoments, b: FisherMoments) -> float:
    pairs = [(a.g.components, b.g.components)]
    if a.C is not None:
        pairs.append((a.C.components, b.C.components))
    return max(
        float(np.max(np.abs(x - y))) / max(1.0, float(np.max(np.abs(y)))) for x, y in pairs
    )


def fisher_by_quadrature(
    ll: LogLikelihood,
    theta: Sequence[float],
    order: int = 3,
    quad_tol: Optional[float] = None,
    nodes: Optional[int] = None,
) -> FisherMoments:
    """
    Fisher metric E[s s] and cubic form E[s s s] by quadrature.

    With ``nodes`` given the rule is used as is; otherwise the node count
    doubles from ``settings.quad_nodes`` until successive results agree to
    ``quad_tol``.

    Raises:
        QuadratureError: If doubling does not converge or the weights do not
            integrate the density to 1
    """
    if order not in (2, 3):
        raise ValueError("order must be 2 (metric) or 3 (metric and cubic form)")
    theta = as_point(theta)
    ll.check(theta)
    quad_tol = settings.quad_tol if quad_tol is None else quad_tol
    if nodes is not None:
        result = _moments(ll, theta, nodes, order)
    else:
        count = settings.quad_nodes
        result = _moments(ll, theta, count, order)
        while True:
            count *= 2
            if count > settings.quad_max_nodes:
                raise QuadratureError(
                    f"Quadrature did not converge within {settings.quad_max_nodes} nodes",
                    {"theta": theta.tolist()},
                )
            refined = _moments(ll, theta, count, order)
            converged = _change(result, refined) < quad_tol
            result = refined
            if converged:
                break
    if abs(result.mass - 1.0) > quad_tol:
        raise QuadratureError(
            f"Quadrature weights integrate to {result.mass:.12g}, not 1",
            {"theta": theta.tolist(), "nodes": result.nodes},
        )
    logger.debug(f"Fisher moments at {theta.tolist()} with {result.nodes} nodes")
    return result


def score_mean(ll: LogLikelihood, theta: Sequence[float], nodes: Optional[int] = None) -> np.ndarray:
    """E[score] by quadrature; zero for a correctly normalized family."""
    return fisher_by_quadrature(ll, theta, order=2, nodes=nodes).mean_score


class QuadratureFields:
    """Chart fields backed by fixed-node quadrature, differentiated by finite differences."""

    def __init__(self, ll: LogLikelihood, nodes: int, step: float, quad_tol: Optional[float] = None):
        self.ll = ll
        self.nodes = nodes
        self.step = step
        self.quad_tol = quad_tol
        self._cache: Dict[Tuple[float, ...], FisherMoments] = {}
        self._lock = threading.Lock()

    def moments(self, theta: np.ndarray) -> FisherMoments:
        key = tuple(np.asarray(theta, dtype=float).tolist())
        with self._lock:
            cached = self._cache.get(key)
        if cached is None:
            cached = fisher_by_quadrature(
                self.ll, key, order=3, quad_tol=self.quad_tol, nodes=self.nodes
            )
            with self._lock:
                self._cache[key] = cached
        return cached

    def metric(self, i: int, j: int) -> ScalarField:
        return FiniteDifferenceField(lambda th: self.moments(th).g.components[i, j], self.step)

    def cubic(self, i: int, j: int, k: int) -> ScalarField:
        return FiniteDifferenceField(lambda th: self.moments(th).C.components[i, j, k], self.step)


# Built-in families


@dataclass(frozen=True)
class FamilyForm:
    """Closed-form chart of a family: expressions on sorted 0-based indices."""

    coords: Tuple[str, ...]
    metric: Dict[Tuple[int, int], str]
    cubic: Dict[Tuple[int, int, int], str]
    box: Tuple[Tuple[float, float], ...]
    domain: Callable[[Sequence[Tuple[float, float]]], Optional[str]]
    likelihood: Optional[LogLikelihood] = None


def _positive_axes(*axes: int):
    def check(box):
        for axis in axes:
            if box[axis][0] <= 0:
                return f"coordinate {axis + 1} must stay positive"
        return None

    return check


def _sphere_domain(box):
    if box[0][0] <= 0 or box[0][1] >= math.pi:
        return "theta must stay inside (0, pi)"
    return None


def _natural_gamma_domain(box):
    if box[0][0] <= -1.0 or box[1][1] >= 0.0:
        return "need theta1 > -1 and theta2 < 0"
    return None


def _unrestricted(box):
    return None


def _family_form(spec: ModelSpec) -> FamilyForm:
    params = spec.params
    if spec.family == "sphere":
        radius = float(params.get("radius", 1.0))
        if radius <= 0:
            raise ParamError(f"Sphere radius must be positive, got {radius}")
        r2 = repr(radius * radius)
        return FamilyForm(
            coords=("theta", "phi"),
            metric={(0, 0): r2, (1, 1): f"{r2}*sin(theta)^2"},
            cubic={},
            box=((0.5, 2.6), (0.0, 2 * math.pi)),
            domain=_sphere_domain,
        )
    if spec.family == "hyperbolic":
        return FamilyForm(
            coords=("x", "y"),
            metric={(0, 0): "1/y^2", (1, 1): "1/y^2"},
            cubic={},
            box=((-1.0, 1.0), (0.5, 2.0)),
            domain=_positive_axes(1),
        )
    if spec.family == "normal_fisher":
        return FamilyForm(
            coords=("mu", "sigma"),
            metric={(0, 0): "1/sigma^2", (1, 1): "2/sigma^2"},
            cubic={(0, 0, 1): "2/sigma^3", (1, 1, 1): "8/sigma^3"},
            box=((-1.0, 1.0), (0.5, 2.0)),
            domain=_positive_axes(1),
            likelihood=NormalLogLikelihood(),
        )
    if spec.family == "gamma_fisher":
        chart = params.get("chart", "shape_rate")
        if chart == "shape_rate":
            return FamilyForm(
                coords=("k", "beta"),
                metric={(0, 0): "trigamma(k)", (0, 1): "-1/beta", (1, 1): "k/beta^2"},
                cubic={
                    (0, 0, 0): "polygamma(2, k)",
                    (0, 1, 1): "1/beta^2",
                    (1, 1, 1): "-2*k/beta^3",
                },
                box=((1.0, 4.0), (0.5, 2.0)),
                domain=_positive_axes(0, 1),
                likelihood=GammaLogLikelihood("shape_rate"),
            )
        if chart == "natural":
            return FamilyForm(
                coords=("theta1", "theta2"),
                metric={
                    (0, 0): "trigamma(theta1 + 1)",
                    (0, 1): "-1/theta2",
                    (1, 1): "(theta1 + 1)/theta2^2",
                },
                cubic={
                    (0, 0, 0): "polygamma(2, theta1 + 1)",
                    (0, 1, 1): "1/theta2^2",
                    (1, 1, 1): "-2*(theta1 + 1)/theta2^3",
                },
                box=((0.0, 3.0), (-2.0, -0.5)),
                domain=_natural_gamma_domain,
                likelihood=GammaLogLikelihood("natural"),
            )
        raise ParamError(f"Unknown gamma chart {chart!r}; expected shape_rate or natural")
    raise ParamError(f"Family {spec.family!r} has no closed-form expressions")


def _flat_entries(spec: ModelSpec, dim: int) -> Dict[Tuple[int, int, int], ScalarField]:
    raw = spec.params.get("entries", [{"indices": [1, 1, 1], "value": 2.0}])
    entries: Dict[Tuple[int, int, int], ScalarField] = {}
    values: Dict[Tuple[int, int, int], float] = {}
    for position, entry in enumerate(raw):
        try:
            indices = [int(i) for i in entry["indices"]]
            value = float(entry["value"])
        except (KeyError, TypeError, ValueError) as e:
            raise ParamError(f"Cubic entry {position} needs 'indices' and 'value'") from e
        if len(indices) != 3 or any(not 1 <= i <= dim for i in indices):
            raise ParamError(f"Cubic entry {position} has indices {indices} outside 1..{dim}")
        key = tuple(sorted(i - 1 for i in indices))
        if key in values and values[key] != value:
            raise ParamError(f"Cubic entry {position} conflicts with an earlier entry for {indices}")
        values[key] = value
        entries[key] = ConstantField(value)
    return entries


def _resolve_box(spec_box, default, dim: int) -> Tuple[Tuple[float, float], ...]:
    box = tuple((float(lo), float(hi)) for lo, hi in (spec_box or default))
    if len(box) != dim or any(lo >= hi for lo, hi in box):
        raise ParamError("Box needs one lo < hi interval per coordinate", {"box": box})
    return box


def _wrap(field: ExpressionField, strategy: str, step: float) -> ScalarField:
    if strategy == "fd":
        return FiniteDifferenceField(field.expression.evaluate, step)
    return field


def builtin_chart(spec: ModelSpec, dim: int = 2, label: Optional[str] = None) -> Chart:
    """
    Chart of a built-in family.

    Args:
        spec: Family, parameters and jet options
        dim: Dimension for euclidean and flat_with_cubic; 2 for the others
        label: Chart label (defaults to the family name)

    Raises:
        ParamError: For invalid parameters or a box outside the domain
    """
    label = label or spec.family
    if spec.family in ("euclidean", "flat_with_cubic"):
        n = int(spec.params.get("n", dim))
        if n < 2:
            raise ParamError(f"Dimension must be >= 2, got {n}")
        one = ConstantField(1.0)
        metric = symmetric_grid({(i, i): one for i in range(n)}, n, 2, ZERO)
        cubic_entries = _flat_entries(spec, n) if spec.family == "flat_with_cubic" else {}
        box = _resolve_box(spec.box, [(-1.0, 1.0)] * n, n)
        return Chart(
            dim=n,
            coords=tuple(f"x{i}" for i in range(1, n + 1)),
            metric_field=metric,
            cubic_field=symmetric_grid(cubic_entries, n, 3, ZERO),
            label=label,
            box=box,
            family=spec.family,
        )

    if dim != 2:
        raise ParamError(f"Family {spec.family!r} is two-dimensional, got dim={dim}")
    form = _family_form(spec)
    box = _resolve_box(spec.box, form.box, 2)
    problem = form.domain(box)
    if problem:
        raise ParamError(f"Box leaves the {spec.family} domain: {problem}", {"box": box})

    if spec.source == "quadrature":
        if form.likelihood is None:
            raise ParamError(f"Family {spec.family!r} has no likelihood for quadrature")
        fields = QuadratureFields(
            form.likelihood, settings.field_quad_nodes, spec.fd_step, spec.quad_tol
        )
        metric_entries = {key: fields.metric(*key) for key in [(0, 0), (0, 1), (1, 1)]}
        cubic_entries = {
            key: fields.cubic(*key) for key in [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)]
        }
    else:
        metric_entries = {
            key: _wrap(ExpressionField.parse(src, 2, form.coords), spec.strategy, spec.fd_step)
            for key, src in form.metric.items()
        }
        cubic_entries = {
            key: _wrap(ExpressionField.parse(src, 2, form.coords), spec.strategy, spec.fd_step)
            for key, src in form.cubic.items()
        }
    return Chart(
        dim=2,
        coords=form.coords,
        metric_field=symmetric_grid(metric_entries, 2, 2, ZERO),
        cubic_field=symmetric_grid(cubic_entries, 2, 3, ZERO),
        label=label,
        box=box,
        family=spec.family,
    )


def likelihood_for(spec: ModelSpec) -> LogLikelihood:
    """Log-likelihood behind a statistical family."""
    form = _family_form(spec)
    if form.likelihood is None:
        raise ParamError(f"Family {spec.family!r} is not a statistical model")
    return form.likelihood


# Manifold files


def load_manifold_file(path: str) -> ManifoldFile:
    """
    Read and validate a manifold file.

    Raises:
        ManifoldFileError: If the file is missing, not JSON, or off-schema
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ManifoldFileError(f"Cannot read manifold file {path}: {e.strerror}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ManifoldFileError(
            f"{path}: invalid JSON ({e.msg})", position=e.pos, expected=("JSON value",)
        ) from e
    try:
        return ManifoldFile.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}"
            for err in e.errors()
        )
        raise ManifoldFileError(f"{path}: {problems}", details={"errors": len(e.errors())}) from e


def _parse_entry(source: str, where: str, dim: int, coords: Sequence[str]) -> Expression:
    try:
        return parse_expression(source, dim, coords)
    except ParseError as e:
        raise ManifoldFileError(
            f"{where}: {e.message}", position=e.position, expected=e.expected
        ) from e


def _custom_chart(mf: ManifoldFile, custom: CustomSection) -> Chart:
    n = mf.dim
    coords = mf.coordinate_names
    parsed = [
        [_parse_entry(src, f"metric[{i + 1}][{j + 1}]", n, coords) for j, src in enumerate(row)]
        for i, row in enumerate(custom.metric)
    ]
    metric_entries: Dict[Tuple[int, ...], ScalarField] = {}
    for i in range(n):
        for j in range(i, n):
            if parsed[i][j] != parsed[j][i]:
                raise ManifoldFileError(
                    f"metric[{i + 1}][{j + 1}] and metric[{j + 1}][{i + 1}] differ; "
                    "the metric must be symmetric as written"
                )
            field = ExpressionField(parsed[i][j], custom.metric[i][j])
            metric_entries[(i, j)] = _wrap(field, mf.jets.strategy, mf.jets.fd_step)

    cubic_entries: Dict[Tuple[int, ...], ScalarField] = {}
    seen: Dict[Tuple[int, ...], Tuple[int, Expression]] = {}
    for position, entry in enumerate(custom.cubic):
        where = f"cubic entry {position + 1} {entry.indices}"
        expression = _parse_entry(entry.expr, where, n, coords)
        key = tuple(sorted(i - 1 for i in entry.indices))
        if key in seen:
            if seen[key][1] != expression:
                raise ManifoldFileError(
                    f"{where} conflicts with cubic entry {seen[key][0] + 1}"
                )
            continue
        seen[key] = (position, expression)
        field = ExpressionField(expression, entry.expr)
        cubic_entries[key] = _wrap(field, mf.jets.strategy, mf.jets.fd_step)

    return Chart(
        dim=n,
        coords=tuple(coords),
        metric_field=symmetric_grid(metric_entries, n, 2, ZERO),
        cubic_field=symmetric_grid(cubic_entries, n, 3, ZERO),
        label=mf.name,
        box=tuple((float(lo), float(hi)) for lo, hi in mf.box),
        family="custom",
    )


def spec_from_manifold(mf: ManifoldFile) -> ModelSpec:
    """Model spec for a file with a builtin section."""
    params = dict(mf.builtin.params)
    source = params.pop("source", "closed_form")
    try:
        return ModelSpec(
            family=mf.builtin.family,
            params=params,
            box=mf.box,
            strategy=mf.jets.strategy,
            fd_step=mf.jets.fd_step,
            source=source,
            quad_tol=mf.tolerances.quad_tol,
        )
    except ValidationError as e:
        raise ManifoldFileError(f"{mf.name}: invalid builtin section ({e.errors()[0]['msg']})") from e


def chart_from_manifold(mf: ManifoldFile) -> Chart:
    """
    Chart described by a manifold file.

    Raises:
        ManifoldFileError: For asymmetric metrics or conflicting cubic entries
        ParamError: For invalid builtin parameters
    """
    if mf.custom is not None:
        return _custom_chart(mf, mf.custom)
    chart = builtin_chart(spec_from_manifold(mf), mf.dim, mf.name)
    if chart.dim != mf.dim:
        raise ManifoldFileError(f"{mf.name}: family has dimension {chart.dim}, file says {mf.dim}")
    if mf.coords is not None:
        chart = Chart(
            dim=chart.dim,
            coords=tuple(mf.coords),
            metric_field=chart.metric_field,
            cubic_field=chart.cubic_field,
            label=chart.label,
            box=chart.box,
            family=chart.family,
        )
    return chart


def _quadrature_backed(mf: Optional[ManifoldFile]) -> bool:
    return bool(mf and mf.builtin and mf.builtin.params.get("source") == "quadrature")


def chart_strategy_tol(chart: Chart, tol: Optional[float], mf: Optional[ManifoldFile] = None) -> float:
    """
    Tolerance for a chart: explicit value, file override, then settings by jet strategy.

    Without an explicit value, a quadrature-backed chart is never checked more
    tightly than its quadrature tolerance.
    """
    if tol is not None:
        return tol
    fd = chart.strategy == "finite-difference"
    override = None
    if mf is not None:
        override = mf.tolerances.fd_tol if fd else mf.tolerances.tol
    effective = override if override is not None else (settings.fd_tol if fd else settings.tol)
    if _quadrature_backed(mf):
        quad_tol = mf.tolerances.quad_tol or settings.quad_tol
        effective = max(effective, quad_tol)
    return effective
