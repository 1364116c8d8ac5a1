"""Curvature of the dual pair, its decompositions and projective objects.

Index conventions (all arrays in chart components):

    R[l,i,j,k]   = R(d_i, d_j) d_k, component l
                 = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    Ric[j,k]     = R[i,i,j,k]
    R04[i,j,k,w] = g_lw R[l,i,j,k]  = g(R(X,Y)Z, W)
    nabla T      = derivative slot first
    [K,K][l,i,j,k] = K^l_im K^m_jk - K^l_jm K^m_ik
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from statman.config import settings
from statman.exceptions import DimensionError, VarianceError
from statman.services.structure_service import (
    Chart,
    ConnectionCoeffs,
    ConnectionField,
    ProjectiveTransform,
    connection_field,
    dual_chart,
    local_geometry,
)
from statman.utils.jets import MAX_ORDER, AffineField, Jet, ScalarField, as_point
from statman.utils.tensor_core import (
    LOWER,
    UPPER,
    Tensor,
    contract,
    lower_first,
    rel_defect,
    wedge_identity,
)

logger = logging.getLogger(__name__)

_SLOT_LETTERS = "abcdefgh"

ANALYTIC = "analytic"
DERIVATIVE = "derivative"


def _riemann_jet(gamma: Jet) -> Jet:
    d = gamma.derivative()  # d[l,j,k,i] = d_i G^l_jk
    first = Jet.einsum("ljki->lijk", d) - Jet.einsum("likj->lijk", d)
    quadratic = Jet.einsum("lim,mjk->lijk", gamma, gamma) - Jet.einsum(
        "ljm,mik->lijk", gamma, gamma
    )
    return first + quadratic


def bracket(K: np.ndarray) -> np.ndarray:
    """[K,K][l,i,j,k] = K^l_im K^m_jk - K^l_jm K^m_ik."""
    return np.einsum("lim,mjk->lijk", K, K) - np.einsum("ljm,mik->lijk", K, K)


def alternate(nabla_K: np.ndarray) -> np.ndarray:
    """alt[l,i,j,k] = (nabla_i K)^l_jk - (nabla_j K)^l_ik."""
    return np.einsum("iljk->lijk", nabla_K) - np.einsum("jlik->lijk", nabla_K)


def covariant_derivative(
    field: Jet,
    variance: Union[str, Sequence[str]],
    gamma: Union[np.ndarray, ConnectionCoeffs],
) -> Tensor:
    """
    Covariant derivative of a tensor field from its jet.

    Args:
        field: Jet of the components, order >= 1
        variance: One marker per slot, e.g. ``"ulll"``
        gamma: Christoffel symbols [k, i, j] at the same point

    Returns:
        Tensor with the derivative slot prepended (lower)
    """
    if isinstance(gamma, ConnectionCoeffs):
        gamma = gamma.gamma.components
    variance = tuple(variance)
    rank = len(variance)
    if field.value.ndim != rank:
        raise VarianceError(f"Field of rank {field.value.ndim} given variance {variance}")
    letters = _SLOT_LETTERS[:rank]
    result = np.moveaxis(field.partials[0], -1, 0).copy()
    for slot, marker in enumerate(variance):
        source = letters[:slot] + "m" + letters[slot + 1 :]
        if marker == UPPER:
            result += np.einsum(
                f"{letters[slot]}zm,{source}->z{letters}", gamma, field.value
            )
        else:
            result -= np.einsum(
                f"mz{letters[slot]},{source}->z{letters}", gamma, field.value
            )
    return Tensor(result, (LOWER,) + variance)


@dataclass(frozen=True, eq=False)
class CurvatureState:
    """Every per-point array the identity and classification checks read."""

    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    C: np.ndarray
    K: np.ndarray
    tau: np.ndarray
    gamma_hat: np.ndarray
    gamma: np.ndarray
    gamma_star: np.ndarray
    R: np.ndarray
    R_star: np.ndarray
    R_hat: np.ndarray
    Ric: np.ndarray
    Ric_star: np.ndarray
    Ric_hat: np.ndarray
    nabla_hat_C: np.ndarray
    nabla_C: np.ndarray
    nabla_hat_K: np.ndarray
    nabla_K: np.ndarray
    nabla_hat_tau: np.ndarray
    nabla_tau: np.ndarray
    nabla_hat_g: np.ndarray
    nabla_g: np.ndarray
    nabla_R: np.ndarray
    nabla_star_R_star: np.ndarray
    nabla_hat_R_hat: np.ndarray

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    @property
    def bracket(self) -> np.ndarray:
        return bracket(self.K)

    @property
    def alt_hat(self) -> np.ndarray:
        return alternate(self.nabla_hat_K)

    @property
    def alt_nabla(self) -> np.ndarray:
        return alternate(self.nabla_K)

    @property
    def div_K_hat(self) -> np.ndarray:
        return np.einsum("iijk->jk", self.nabla_hat_K)

    @property
    def div_K_nabla(self) -> np.ndarray:
        return np.einsum("iijk->jk", self.nabla_K)

    def lower(self, t: np.ndarray) -> np.ndarray:
        return lower_first(t, self.g)

    @property
    def S(self) -> np.ndarray:
        return 0.5 * (self.lower(self.R) + self.lower(self.R_star))


def curvature_state(chart: Chart, point: Sequence[float]) -> CurvatureState:
    """Cached curvature arrays of the dual pair at a point."""
    point = as_point(point)
    return _curvature_state(chart, tuple(point.tolist()))


@lru_cache(maxsize=1024)
def _curvature_state(chart: Chart, key: Tuple[float, ...]) -> CurvatureState:
    geometry = local_geometry(chart, key)
    gamma_hat_j = geometry.gamma_hat
    K_j = geometry.difference
    gamma_j = gamma_hat_j + K_j
    gamma_star_j = gamma_hat_j - K_j
    gh, gm, gs = gamma_hat_j.value, gamma_j.value, gamma_star_j.value

    R_j = _riemann_jet(gamma_j)
    R_star_j = _riemann_jet(gamma_star_j)
    R_hat_j = _riemann_jet(gamma_hat_j)
    tau_j = Jet.einsum("mim->i", K_j)
    metric = geometry.metric.truncate(1)

    return CurvatureState(
        point=np.asarray(key),
        g=geometry.metric.value,
        g_inv=geometry.metric_inv.value,
        C=geometry.cubic.value,
        K=K_j.value,
        tau=tau_j.value,
        gamma_hat=gh,
        gamma=gm,
        gamma_star=gs,
        R=R_j.value,
        R_star=R_star_j.value,
        R_hat=R_hat_j.value,
        Ric=np.einsum("iijk->jk", R_j.value),
        Ric_star=np.einsum("iijk->jk", R_star_j.value),
        Ric_hat=np.einsum("iijk->jk", R_hat_j.value),
        nabla_hat_C=covariant_derivative(geometry.cubic, "lll", gh).components,
        nabla_C=covariant_derivative(geometry.cubic, "lll", gm).components,
        nabla_hat_K=covariant_derivative(K_j, "ull", gh).components,
        nabla_K=covariant_derivative(K_j, "ull", gm).components,
        nabla_hat_tau=covariant_derivative(tau_j, "l", gh).components,
        nabla_tau=covariant_derivative(tau_j, "l", gm).components,
        nabla_hat_g=covariant_derivative(metric, "ll", gh).components,
        nabla_g=covariant_derivative(metric, "ll", gm).components,
        nabla_R=covariant_derivative(R_j, "ulll", gm).components,
        nabla_star_R_star=covariant_derivative(R_star_j, "ulll", gs).components,
        nabla_hat_R_hat=covariant_derivative(R_hat_j, "ulll", gh).components,
    )


def clear_caches() -> None:
    _curvature_state.cache_clear()


def riemann(conn: ConnectionField, point: Sequence[float]) -> Tensor:
    """Curvature tensor of any connection field, as a (1,3) tensor."""
    return Tensor.of(_riemann_jet(conn.jet(point)).value, "ulll")


def riemann_decomposed(
    chart: Chart, point: Sequence[float], which: str = "R", alpha: Optional[float] = None
) -> Tensor:
    """
    Curvature assembled from Levi-Civita pieces instead of from Gamma.

        R        = R_hat + alt(nabla_hat K) + [K,K]
        R*       = R_hat - alt(nabla_hat K) + [K,K]
        R^alpha  = R_hat + alpha alt(nabla_hat K) + alpha^2 [K,K]

    Args:
        which: 'R', 'R*' or 'R^alpha'
        alpha: Required for 'R^alpha'
    """
    state = curvature_state(chart, point)
    coefficients = {"R": (1.0, 1.0), "R*": (-1.0, 1.0)}
    if which == "R^alpha":
        if alpha is None:
            raise ValueError("R^alpha needs an alpha value")
        coefficients["R^alpha"] = (alpha, alpha * alpha)
    if which not in coefficients:
        raise ValueError(f"Unknown curvature {which!r}; expected R, R* or R^alpha")
    a, b = coefficients[which]
    return Tensor.of(state.R_hat + a * state.alt_hat + b * state.bracket, "ulll")


def ricci(curvature: Tensor) -> Tensor:
    """Ric(Y,Z) = trace of X -> R(X,Y)Z."""
    return contract(curvature, 0, 1)


def div_K(chart: Chart, point: Sequence[float], conn: str = "levi_civita") -> Tensor:
    """(div K)(Y,Z) = tr{X -> (nabla_X K)(Y,Z)} for nabla_hat or nabla."""
    state = curvature_state(chart, point)
    if conn == "levi_civita":
        return Tensor.of(state.div_K_hat, "ll")
    if conn == "nabla":
        return Tensor.of(state.div_K_nabla, "ll")
    raise ValueError(f"div K is defined for levi_civita or nabla, got {conn!r}")


def _ricci_terms(state: CurvatureState) -> Dict[str, np.ndarray]:
    K = state.K
    return {
        "tau_K": np.einsum("l,ljk->jk", state.tau, K),
        "g_KK": np.einsum("ajb,bka->jk", K, K),
    }


def ricci_decompositions(chart: Chart, point: Sequence[float]) -> Dict[str, float]:
    """
    Defects of the Ricci decompositions in Levi-Civita and nabla form.

    With tau_i = K^m_im, (tau K)(Y,Z) = tau(K_Y Z) and
    g(K_Y, K_Z) = tr(K_Y K_Z).
    """
    s = curvature_state(chart, point)
    t = _ricci_terms(s)
    tau_K, g_KK = t["tau_K"], t["g_KK"]
    d_tau = s.nabla_hat_tau - s.nabla_hat_tau.T
    return {
        "Ric (levi-civita form)": rel_defect(
            s.Ric, s.Ric_hat + s.div_K_hat - s.nabla_hat_tau + tau_K - g_KK
        ),
        "Ric (nabla form)": rel_defect(
            s.Ric, s.Ric_hat + s.div_K_nabla - s.nabla_tau - tau_K + g_KK
        ),
        "Ric* (levi-civita form)": rel_defect(
            s.Ric_star, s.Ric_hat - s.div_K_hat + s.nabla_hat_tau + tau_K - g_KK
        ),
        "Ric* (nabla form)": rel_defect(
            s.Ric_star, s.Ric_hat - s.div_K_nabla + s.nabla_tau + 3 * tau_K - 3 * g_KK
        ),
        "half difference of Ricci (levi-civita form)": rel_defect(
            0.5 * (s.Ric - s.Ric_star), s.div_K_hat - s.nabla_hat_tau
        ),
        # half the difference of the two nabla-form lines above
        "half difference of Ricci (nabla form)": rel_defect(
            0.5 * (s.Ric - s.Ric_star), s.div_K_nabla - s.nabla_tau - 2 * (tau_K - g_KK)
        ),
        "half sum of Ricci": rel_defect(
            0.5 * (s.Ric + s.Ric_star), s.Ric_hat + tau_K - g_KK
        ),
        "antisymmetric part of Ric": rel_defect(s.Ric - s.Ric.T, -d_tau),
        "antisymmetric part of Ric*": rel_defect(s.Ric_star - s.Ric_star.T, d_tau),
    }


def statistical_curvature(chart: Chart, point: Sequence[float]) -> Tensor:
    """S(X,Y,Z,W) = (g(R(X,Y)Z,W) + g(R*(X,Y)Z,W)) / 2."""
    return Tensor.of(curvature_state(chart, point).S, "llll")


def projective_curvature(curvature: Tensor, ricci_tensor: Tensor) -> Tensor:
    """
    P = R - (Ric / (n - 1)) ^ Id.

    Raises:
        DimensionError: If n < 2
    """
    n = curvature.dim
    if n < 2:
        raise DimensionError("Projective curvature needs dimension >= 2")
    schouten = ricci_tensor.components / (n - 1)
    return Tensor.of(curvature.components - wedge_identity(schouten), "ulll")


@dataclass(frozen=True, eq=False)
class ProjectivePack:
    """Projective objects of one connection at a point; derivative slots first."""

    point: np.ndarray
    gamma: np.ndarray
    R: np.ndarray
    Ric: np.ndarray
    schouten: np.ndarray
    P: np.ndarray
    cotton: np.ndarray
    delta_P: np.ndarray
    delta_R: np.ndarray
    nabla_R: np.ndarray
    nabla_Ric: np.ndarray


def projective_pack(conn: ConnectionField, point: Sequence[float]) -> ProjectivePack:
    """
    Curvature, projective curvature, Cotton tensor and divergences of P and R.

        gamma_P      = Ric / (n - 1)
        Cot[i,j,k]   = (nabla_i gamma_P)_jk - (nabla_j gamma_P)_ik
        delta_P[ijk] = sum_v (nabla_v P)^v_ijk
    """
    point = as_point(point)
    n = point.shape[0]
    gamma_j = conn.jet(point)
    gamma = gamma_j.value
    R_j = _riemann_jet(gamma_j)
    ric_j = Jet.einsum("iijk->jk", R_j)
    schouten_j = ric_j * (1.0 / (n - 1))
    delta = Jet.constant(np.eye(n), n, 1)
    P_j = R_j - (
        Jet.einsum("jk,li->lijk", schouten_j, delta)
        - Jet.einsum("ik,lj->lijk", schouten_j, delta)
    )
    nabla_schouten = covariant_derivative(schouten_j, "ll", gamma).components
    nabla_P = covariant_derivative(P_j, "ulll", gamma).components
    nabla_R = covariant_derivative(R_j, "ulll", gamma).components
    return ProjectivePack(
        point=point,
        gamma=gamma,
        R=R_j.value,
        Ric=ric_j.value,
        schouten=schouten_j.value,
        P=P_j.value,
        cotton=nabla_schouten - np.swapaxes(nabla_schouten, 0, 1),
        delta_P=np.einsum("vvijk->ijk", nabla_P),
        delta_R=np.einsum("vvijk->ijk", nabla_R),
        nabla_R=nabla_R,
        nabla_Ric=covariant_derivative(ric_j, "ll", gamma).components,
    )


def cotton(conn: ConnectionField, point: Sequence[float]) -> Tensor:
    """Cotton tensor of the projective Schouten tensor Ric / (n - 1)."""
    return Tensor.of(projective_pack(conn, point).cotton, "lll")


def projective_transform(conn: ConnectionField, potential: ScalarField) -> ProjectiveTransform:
    """Connection projectively equivalent to ``conn`` through rho = d(potential)."""
    return ProjectiveTransform(conn, potential)


def projective_law_defects(
    conn: ConnectionField, potential: ScalarField, point: Sequence[float]
) -> Dict[str, float]:
    """
    Defects of the transformation laws under Gamma -> Gamma + rho (x) delta + delta (x) rho.

        P_bar     = P
        gamma_bar = gamma - nabla rho + rho (x) rho
        Cot_bar   = Cot + rho_m P^m_ijk + rho_k (gamma_ij - gamma_ji)
    """
    point = as_point(point)
    base = projective_pack(conn, point)
    moved = projective_pack(projective_transform(conn, potential), point)
    rho_j = potential.jet(point, MAX_ORDER - 1).derivative()
    rho = rho_j.value
    nabla_rho = rho_j.partials[0].T - np.einsum("mik,m->ik", base.gamma, rho)
    schouten = base.schouten
    return {
        "projective curvature invariant": rel_defect(moved.P, base.P),
        "schouten transformation": rel_defect(
            moved.schouten, schouten - nabla_rho + np.outer(rho, rho)
        ),
        "cotton transformation": rel_defect(
            moved.cotton - base.cotton,
            np.einsum("m,mijk->ijk", rho, base.P)
            + np.einsum("k,ij->ijk", rho, schouten - schouten.T),
        ),
    }


@dataclass(frozen=True, eq=False)
class CurvaturePack:
    """Curvature tensors of a chart at one point."""

    point: np.ndarray
    R: Tensor
    R_star: Tensor
    R_hat: Tensor
    Ric: Tensor
    Ric_star: Tensor
    Ric_hat: Tensor
    tau: Tensor
    div_K: Tensor
    S: Tensor
    R_alpha: Dict[float, Tensor]


def curvature_pack(
    chart: Chart, point: Sequence[float], alphas: Optional[Sequence[float]] = None
) -> CurvaturePack:
    """Curvature of nabla, nabla_star, Levi-Civita and the alpha grid."""
    alphas = settings.alphas if alphas is None else alphas
    s = curvature_state(chart, point)
    R_alpha = {
        float(a): riemann(connection_field(chart, "alpha", a), s.point) for a in alphas
    }
    return CurvaturePack(
        point=s.point,
        R=Tensor.of(s.R, "ulll"),
        R_star=Tensor.of(s.R_star, "ulll"),
        R_hat=Tensor.of(s.R_hat, "ulll"),
        Ric=Tensor.of(s.Ric, "ll"),
        Ric_star=Tensor.of(s.Ric_star, "ll"),
        Ric_hat=Tensor.of(s.Ric_hat, "ll"),
        tau=Tensor.of(s.tau, "l"),
        div_K=Tensor.of(s.div_K_hat, "ll"),
        S=Tensor.of(s.S, "llll"),
        R_alpha=R_alpha,
    )


@dataclass(frozen=True)
class IdentityDefect:
    """Relative defect of one identity at one point."""

    name: str
    defect: float
    tier: str


def _swap(t: np.ndarray, subscripts: str) -> np.ndarray:
    return np.einsum(subscripts, t)


def _four_form_defects(prefix: str, T: np.ndarray) -> List[Tuple[str, float]]:
    """Symmetries of a curvature-like (0,4) form T(X,Y,Z,W)."""
    return [
        (f"{prefix} antisymmetric in X,Y", rel_defect(T, -_swap(T, "jikw->ijkw"))),
        (f"{prefix} antisymmetric in Z,W", rel_defect(T, -_swap(T, "ijwk->ijkw"))),
        (
            f"{prefix} first Bianchi",
            rel_defect(T + _swap(T, "jkiw->ijkw"), -_swap(T, "kijw->ijkw")),
        ),
        (f"{prefix} pair symmetric", rel_defect(T, _swap(T, "kwij->ijkw"))),
    ]


def identity_defects(
    chart: Chart, point: Sequence[float], alphas: Optional[Sequence[float]] = None
) -> List[IdentityDefect]:
    """
    Evaluate every curvature identity of the dual pair at one point.

    Identities needing a derivative of curvature are tagged 'derivative'
    and are compared with a tenfold tolerance.
    """
    alphas = settings.alphas if alphas is None else alphas
    s = curvature_state(chart, point)
    n = s.dim
    br, alt_hat, alt_nabla = s.bracket, s.alt_hat, s.alt_nabla
    R04, Rs04, Rh04, br04 = s.lower(s.R), s.lower(s.R_star), s.lower(s.R_hat), s.lower(br)
    nhC = s.nabla_hat_C
    nhC_swapped = _swap(nhC, "yxzw->xyzw")

    results: List[Tuple[str, float, str]] = []

    def add(name: str, defect: float, tier: str = ANALYTIC) -> None:
        results.append((name, float(defect), tier))

    add("levi-civita is metric", rel_defect(s.nabla_hat_g, np.zeros_like(s.nabla_hat_g)))
    add("nabla g = C", rel_defect(s.nabla_g, s.C))
    add(
        "nabla_hat C = -2 g(nabla_hat K)",
        rel_defect(nhC, -2.0 * np.einsum("lw,xlyz->xyzw", s.g, s.nabla_hat_K)),
    )

    for label, R in (("R", s.R), ("R*", s.R_star), ("R_hat", s.R_hat)):
        add(f"{label} antisymmetric in X,Y", rel_defect(R, -np.swapaxes(R, 1, 2)))
        add(
            f"{label} first Bianchi",
            rel_defect(R + _swap(R, "ljki->lijk"), -_swap(R, "lkij->lijk")),
        )
    for label, nR in (
        ("R", s.nabla_R),
        ("R*", s.nabla_star_R_star),
        ("R_hat", s.nabla_hat_R_hat),
    ):
        add(
            f"{label} second Bianchi",
            rel_defect(
                _swap(nR, "xlyzk->xyzlk") + _swap(nR, "ylzxk->xyzlk"),
                -_swap(nR, "zlxyk->xyzlk"),
            ),
            DERIVATIVE,
        )

    add("g(R(X,Y)Z,W) = -g(Z,R*(X,Y)W)", rel_defect(R04, -_swap(Rs04, "ijwk->ijkw")))

    add("R = R_hat + alt(nabla_hat K) + [K,K]", rel_defect(s.R, s.R_hat + alt_hat + br))
    add("R = R_hat + alt(nabla K) - [K,K]", rel_defect(s.R, s.R_hat + alt_nabla - br))
    add("R* = R_hat - alt(nabla_hat K) + [K,K]", rel_defect(s.R_star, s.R_hat - alt_hat + br))
    add(
        "R* = R_hat - alt(nabla K) + 3[K,K]",
        rel_defect(s.R_star, s.R_hat - alt_nabla + 3 * br),
    )
    add("(R - R*)/2 = alt(nabla_hat K)", rel_defect(0.5 * (s.R - s.R_star), alt_hat))
    add(
        "(R - R*)/2 = alt(nabla K) - 2[K,K]",
        rel_defect(0.5 * (s.R - s.R_star), alt_nabla - 2 * br),
    )
    add("(R + R*)/2 = R_hat + [K,K]", rel_defect(0.5 * (s.R + s.R_star), s.R_hat + br))

    add(
        "g(R) = g(R_hat) - nabla_hat C/2 (alternated) + g([K,K])",
        rel_defect(R04, Rh04 - 0.5 * nhC + 0.5 * nhC_swapped + br04),
    )
    add(
        "g(R*) = g(R_hat) + nabla_hat C/2 (alternated) + g([K,K])",
        rel_defect(Rs04, Rh04 + 0.5 * nhC - 0.5 * nhC_swapped + br04),
    )
    add(
        "g(R)(X,Y,Z,W) + g(R)(X,Y,W,Z) = nabla_hat C(Y,X,..) - nabla_hat C(X,Y,..)",
        rel_defect(R04 + _swap(R04, "ijwk->ijkw"), nhC_swapped - nhC),
    )
    add(
        "g(R*)(X,Y,Z,W) + g(R*)(X,Y,W,Z) = nabla_hat C(X,Y,..) - nabla_hat C(Y,X,..)",
        rel_defect(Rs04 + _swap(Rs04, "ijwk->ijkw"), nhC - nhC_swapped),
    )
    add(
        "g(R)(X,Y,Z,W) + g(R)(Y,X,W,Z) = g(R)(Z,W,X,Y) + g(R)(W,Z,Y,X)",
        rel_defect(
            R04 + _swap(R04, "jiwk->ijkw"),
            _swap(R04, "kwij->ijkw") + _swap(R04, "wkji->ijkw"),
        ),
    )
    add(
        "g(R) first Bianchi",
        rel_defect(R04 + _swap(R04, "jkiw->ijkw"), -_swap(R04, "kijw->ijkw")),
    )
    add("g(R) antisymmetric in X,Y", rel_defect(R04, -_swap(R04, "jikw->ijkw")))

    for name, defect in _four_form_defects("S", s.S):
        add(name, defect)
    for name, defect in _four_form_defects("g(R_hat)", Rh04):
        add(name, defect)

    for name, defect in ricci_decompositions(chart, s.point).items():
        add(name, defect)
    add("div K symmetric", rel_defect(s.div_K_hat, s.div_K_hat.T))
    add(
        "volume form",
        rel_defect(
            0.5 * np.einsum("ab,abi->i", s.g_inv, local_geometry(chart, s.point).metric.partials[0])
            - np.einsum("mim->i", s.gamma),
            -s.tau,
        ),
    )

    for alpha in alphas:
        R_alpha = riemann(connection_field(chart, "alpha", alpha), s.point).components
        add(
            f"R^alpha = R_hat + alpha alt + alpha^2 [K,K] (alpha={alpha:g})",
            rel_defect(R_alpha, s.R_hat + alpha * alt_hat + alpha * alpha * br),
        )
        add(
            f"R^alpha = R + (alpha^2-1)[K,K] + (alpha-1)(R-R*)/2 (alpha={alpha:g})",
            rel_defect(
                R_alpha,
                s.R + (alpha * alpha - 1) * br + (alpha - 1) * 0.5 * (s.R - s.R_star),
            ),
        )

    for label, conn in (
        ("nabla", connection_field(chart, "nabla")),
        ("nabla*", connection_field(dual_chart(chart), "nabla")),
        ("levi-civita", connection_field(chart, "levi_civita")),
    ):
        pack = projective_pack(conn, s.point)
        add(f"P trace-free ({label})", rel_defect(np.einsum("iijk->jk", pack.P), np.zeros((n, n))))
        add(
            f"delta P = (n-2) Cot ({label})",
            rel_defect(pack.delta_P, (n - 2) * pack.cotton),
            DERIVATIVE,
        )
        add(
            f"delta R = (n-1) Cot ({label})",
            rel_defect(pack.delta_R, (n - 1) * pack.cotton),
            DERIVATIVE,
        )
        if n == 2:
            add(f"P vanishes in dimension 2 ({label})", rel_defect(pack.P, np.zeros_like(pack.P)))
        # potential with constant rho = d(potential)
        shift = AffineField(0.0, np.linspace(0.1, 0.3, n))
        for law, defect in projective_law_defects(conn, shift, s.point).items():
            add(f"{law} ({label})", defect, DERIVATIVE if law.startswith("cotton") else ANALYTIC)

    return [IdentityDefect(name, defect, tier) for name, defect, tier in results]
