"""Component tensors with index variance, metric handling and defect norms."""

import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from statman.exceptions import ShapeError, SingularMetric, VarianceError

logger = logging.getLogger(__name__)

UPPER = "u"
LOWER = "l"

_SLOT_LETTERS = "abcdefgh"


@dataclass(frozen=True, eq=False)
class Tensor:
    """Components in a chart basis plus one variance marker per slot."""

    components: np.ndarray
    variance: Tuple[str, ...]

    def __post_init__(self):
        components = np.asarray(self.components, dtype=float)
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "variance", tuple(self.variance))
        if components.ndim != len(self.variance):
            raise ShapeError(
                f"Tensor of rank {components.ndim} given {len(self.variance)} variance markers"
            )
        if any(v not in (UPPER, LOWER) for v in self.variance):
            raise VarianceError(f"Unknown variance markers {self.variance}")
        if components.ndim and len(set(components.shape)) != 1:
            raise ShapeError(f"Tensor slots must share one dimension, got {components.shape}")

    @classmethod
    def of(cls, components, variance: str) -> "Tensor":
        """Build from a compact variance string such as ``"ulll"``."""
        return cls(np.asarray(components, dtype=float), tuple(variance))

    @property
    def rank(self) -> int:
        return len(self.variance)

    @property
    def dim(self) -> int:
        return self.components.shape[0] if self.rank else 0

    @property
    def type(self) -> Tuple[int, int]:
        return (self.variance.count(UPPER), self.variance.count(LOWER))

    def __add__(self, other: "Tensor") -> "Tensor":
        _require_compatible(self, other)
        return Tensor(self.components + other.components, self.variance)

    def __sub__(self, other: "Tensor") -> "Tensor":
        _require_compatible(self, other)
        return Tensor(self.components - other.components, self.variance)

    def __neg__(self) -> "Tensor":
        return Tensor(-self.components, self.variance)

    def __mul__(self, factor: float) -> "Tensor":
        return Tensor(self.components * float(factor), self.variance)

    __rmul__ = __mul__


def _require_compatible(a: Tensor, b: Tensor) -> None:
    if a.components.shape != b.components.shape:
        raise ShapeError(
            f"Shape mismatch {a.components.shape} vs {b.components.shape}"
        )
    if a.variance != b.variance:
        raise ShapeError(f"Variance mismatch {a.variance} vs {b.variance}")


@dataclass(frozen=True, eq=False)
class Metric:
    """Metric components at a point with inverse, determinant and signature."""

    g: Tensor
    g_inv: Tensor
    det: float
    signature: Tuple[int, int]

    @classmethod
    def from_components(cls, components, rtol: float = 1e-12) -> "Metric":
        """
        Build a metric, rejecting asymmetric or numerically singular input.

        Args:
            components: Square symmetric array
            rtol: Relative determinant threshold

        Returns:
            Metric

        Raises:
            ShapeError: If components are not square or not symmetric
            SingularMetric: If |det| < rtol * max|g|**n
        """
        array = np.asarray(components, dtype=float)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ShapeError(f"Metric must be square, got shape {array.shape}")
        if max_norm(array - array.T) > 1e-12 * max(1.0, max_norm(array)):
            raise ShapeError("Metric components are not symmetric")
        det = ensure_invertible(array, rtol)
        eigenvalues = np.linalg.eigvalsh(array)
        signature = (int(np.sum(eigenvalues > 0)), int(np.sum(eigenvalues < 0)))
        return cls(
            g=Tensor.of(array, "ll"),
            g_inv=Tensor.of(np.linalg.inv(array), "uu"),
            det=det,
            signature=signature,
        )

    @property
    def dim(self) -> int:
        return self.g.dim


def ensure_invertible(array: np.ndarray, rtol: float = 1e-12) -> float:
    """Return det(array), raising SingularMetric when it is negligible."""
    n = array.shape[0]
    scale = max_norm(array) ** n
    det = float(np.linalg.det(array))
    if scale == 0.0 or not np.isfinite(det) or abs(det) < rtol * scale:
        raise SingularMetric(
            "Metric is singular", {"det": det, "scale": float(scale)}
        )
    return det


def contract(t: Tensor, a: int, b: int) -> Tensor:
    """
    Trace over slots a and b.

    Raises:
        VarianceError: Unless exactly one of the two slots is upper
    """
    if a == b or {t.variance[a], t.variance[b]} != {UPPER, LOWER}:
        raise VarianceError(
            f"Contraction needs one upper and one lower slot, got slots {a}, {b} "
            f"of {''.join(t.variance)}"
        )
    letters = list(_SLOT_LETTERS[: t.rank])
    letters[b] = letters[a]
    kept = [l for i, l in enumerate(letters) if i not in (a, b)]
    components = np.einsum(f"{''.join(letters)}->{''.join(kept)}", t.components)
    variance = tuple(v for i, v in enumerate(t.variance) if i not in (a, b))
    return Tensor(components, variance)


def _apply_to_slot(t: Tensor, slot: int, matrix: np.ndarray, marker: str) -> Tensor:
    letters = _SLOT_LETTERS[: t.rank]
    source = letters[:slot] + "z" + letters[slot + 1 :]
    components = np.einsum(f"{letters[slot]}z,{source}->{letters}", matrix, t.components)
    variance = t.variance[:slot] + (marker,) + t.variance[slot + 1 :]
    return Tensor(components, variance)


def raise_index(t: Tensor, slot: int, metric: Metric) -> Tensor:
    if t.variance[slot] != LOWER:
        raise VarianceError(f"Slot {slot} is already upper")
    return _apply_to_slot(t, slot, metric.g_inv.components, UPPER)


def lower_index(t: Tensor, slot: int, metric: Metric) -> Tensor:
    if t.variance[slot] != UPPER:
        raise VarianceError(f"Slot {slot} is already lower")
    return _apply_to_slot(t, slot, metric.g.components, LOWER)


def _check_slots(t: Tensor, slots: Optional[Sequence[int]]) -> Tuple[int, ...]:
    slots = tuple(range(t.rank)) if slots is None else tuple(slots)
    if len({t.variance[s] for s in slots}) > 1:
        raise VarianceError("Symmetrized slots must share variance")
    return slots


def symmetrize(t: Tensor, slots: Optional[Sequence[int]] = None) -> Tensor:
    """Average over all permutations of the given slots (all slots by default)."""
    slots = _check_slots(t, slots)
    total = np.zeros_like(t.components)
    permutations = list(itertools.permutations(slots))
    for permutation in permutations:
        axes = list(range(t.rank))
        for source, target in zip(slots, permutation):
            axes[source] = target
        total += np.transpose(t.components, axes)
    return Tensor(total / len(permutations), t.variance)


def symmetry_defect(t: Tensor, slots: Optional[Sequence[int]] = None) -> float:
    """Relative distance from t to its symmetrization over ``slots``."""
    return rel_defect(t, symmetrize(t, slots))


def is_totally_symmetric(
    t: Tensor, slots: Optional[Sequence[int]] = None, tol: float = 1e-10
) -> bool:
    return symmetry_defect(t, slots) <= tol


ArrayOrTensor = Union[Tensor, np.ndarray]


def _components(x: ArrayOrTensor) -> np.ndarray:
    return x.components if isinstance(x, Tensor) else np.asarray(x, dtype=float)


def max_norm(x: ArrayOrTensor) -> float:
    """Largest absolute component (0 for empty)."""
    array = _components(x)
    return float(np.max(np.abs(array))) if array.size else 0.0


def rel_defect(a: ArrayOrTensor, b: ArrayOrTensor) -> float:
    """
    Relative max-norm distance ``max|a - b| / max(1, max|a|, max|b|)``.

    Raises:
        ShapeError: If shapes or variances differ
    """
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        _require_compatible(a, b)
    x, y = _components(a), _components(b)
    if x.shape != y.shape:
        raise ShapeError(f"Shape mismatch {x.shape} vs {y.shape}")
    scale = max(1.0, max_norm(x), max_norm(y))
    return max_norm(x - y) / scale


def wedge_identity(a: ArrayOrTensor) -> np.ndarray:
    """(A ^ Id)[l,i,j,k] = A[j,k] delta^l_i - A[i,k] delta^l_j for a (0,2) tensor A."""
    array = _components(a)
    identity = np.eye(array.shape[0])
    return np.einsum("jk,li->lijk", array, identity) - np.einsum(
        "ik,lj->lijk", array, identity
    )


def lower_first(t: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Move the leading upper index of a (1,3) array to a trailing lower slot.

    Returns ``T04[i,j,k,w] = g[l,w] T[l,i,j,k]``.
    """
    return np.einsum("lw,lijk->ijkw", g, t)
