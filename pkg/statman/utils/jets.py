"""Truncated Taylor jets (order <= 3) and the scalar fields that produce them.

A jet holds the value of a field at a point together with its partial
derivatives. Values may be scalars or arrays; derivative axes are always
appended after the value axes, so ``partials[m - 1]`` has shape
``value.shape + (dim,) * m``.
"""

import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from statman.exceptions import DomainError, OrderError

logger = logging.getLogger(__name__)

MAX_ORDER = 3

# Reserved einsum letters for derivative axes; never used for value axes.
_DERIVATIVE_LETTERS = "UVW"
_VALUE_LETTERS = "abcdefgh"

Scalar = Union[int, float]


def as_point(point: Sequence[float]) -> np.ndarray:
    """
    Convert coordinates to a finite 1-d float array.

    Args:
        point: Chart coordinates

    Returns:
        Point as numpy array

    Raises:
        DomainError: If any coordinate is not finite
    """
    array = np.asarray(point, dtype=float).reshape(-1)
    if not np.all(np.isfinite(array)):
        raise DomainError("Point has non-finite coordinates", {"point": array.tolist()})
    return array


@dataclass(frozen=True, eq=False)
class Jet:
    """Value and partial derivatives up to ``order`` of a field at one point."""

    value: np.ndarray
    partials: Tuple[np.ndarray, ...]
    dim: int

    @classmethod
    def constant(cls, value, dim: int, order: int = MAX_ORDER) -> "Jet":
        """Jet of a field that does not vary."""
        value = np.asarray(value, dtype=float)
        partials = tuple(
            np.zeros(value.shape + (dim,) * m) for m in range(1, order + 1)
        )
        return cls(value, partials, dim)

    @classmethod
    def variable(cls, point: np.ndarray, index: int, order: int = MAX_ORDER) -> "Jet":
        """Jet of the coordinate function x^(index+1)."""
        dim = point.shape[0]
        partials = [np.zeros((dim,) * m) for m in range(1, order + 1)]
        if order >= 1:
            partials[0][index] = 1.0
        return cls(np.asarray(point[index], dtype=float), tuple(partials), dim)

    @staticmethod
    def stack(jets: Sequence["Jet"], shape: Tuple[int, ...]) -> "Jet":
        """Assemble scalar jets (row-major) into one array-valued jet."""
        dim = jets[0].dim
        order = min(jet.order for jet in jets)
        value = np.array([jet.value for jet in jets], dtype=float).reshape(shape)
        partials = tuple(
            np.stack([jet.partials[m - 1] for jet in jets]).reshape(
                tuple(shape) + (dim,) * m
            )
            for m in range(1, order + 1)
        )
        return Jet(value, partials, dim)

    @property
    def order(self) -> int:
        return len(self.partials)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def partial(self, m: int) -> np.ndarray:
        """Derivative array of order ``m`` (``m = 0`` is the value)."""
        if m > self.order:
            raise OrderError(f"Jet of order {self.order} has no order-{m} partials")
        return self.value if m == 0 else self.partials[m - 1]

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderError(f"Cannot raise jet order from {self.order} to {order}")
        return Jet(self.value, self.partials[:order], self.dim)

    def derivative(self) -> "Jet":
        """Jet of the first derivative: value axes gain one trailing axis."""
        if self.order == 0:
            raise OrderError("Order-0 jet has no derivative")
        return Jet(self.partials[0], self.partials[1:], self.dim)

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.value))
            and all(np.all(np.isfinite(p)) for p in self.partials)
        )

    # Arithmetic

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            partials = tuple(a + b for a, b in zip(self.partials, other.partials))
            return Jet(self.value + other.value, partials, self.dim)
        return Jet(self.value + other, self.partials, self.dim)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.value, tuple(-p for p in self.partials), self.dim)

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return _elementwise_product(self, other)
        factor = float(other)
        return Jet(self.value * factor, tuple(p * factor for p in self.partials), self.dim)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if other == 0:
            raise DomainError("Division by zero")
        return self * (1.0 / float(other))

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * float(other)

    def __pow__(self, exponent) -> "Jet":
        if isinstance(exponent, Jet):
            return (exponent * self.log()).exp()
        return self.power(float(exponent))

    def __rpow__(self, base) -> "Jet":
        base = float(base)
        if base <= 0.0:
            raise DomainError(f"Non-positive base {base} raised to a variable power")
        return (self * math.log(base)).exp()

    # Univariate composition (scalar jets only)

    def compose(self, derivatives: Sequence[float]) -> "Jet":
        """
        Chain rule to order 3 (Faa di Bruno) for a scalar jet.

        Args:
            derivatives: f(u), f'(u), f''(u), f'''(u) at u = self.value;
                at least ``order + 1`` entries

        Returns:
            Jet of f composed with this jet
        """
        if self.shape != ():
            raise ValueError("compose is defined for scalar jets only")
        f = [float(d) for d in derivatives]
        u = self.partials
        partials = []
        if self.order >= 1:
            partials.append(f[1] * u[0])
        if self.order >= 2:
            partials.append(f[2] * np.einsum("i,j->ij", u[0], u[0]) + f[1] * u[1])
        if self.order >= 3:
            mixed = (
                np.einsum("ij,k->ijk", u[1], u[0])
                + np.einsum("ik,j->ijk", u[1], u[0])
                + np.einsum("jk,i->ijk", u[1], u[0])
            )
            partials.append(
                f[3] * np.einsum("i,j,k->ijk", u[0], u[0], u[0])
                + f[2] * mixed
                + f[1] * u[2]
            )
        result = Jet(np.asarray(f[0]), tuple(partials), self.dim)
        if not result.is_finite():
            raise DomainError("Non-finite result in jet composition")
        return result

    def _scalar_value(self) -> float:
        if self.shape != ():
            raise ValueError("Operation is defined for scalar jets only")
        return float(self.value)

    def reciprocal(self) -> "Jet":
        u = self._scalar_value()
        if u == 0.0:
            raise DomainError("Division by zero")
        return self.compose([1 / u, -1 / u**2, 2 / u**3, -6 / u**4])

    def power(self, c: float) -> "Jet":
        """u**c for a constant exponent."""
        u = self._scalar_value()
        integral = float(c).is_integer()
        if u < 0.0 and not integral:
            raise DomainError(f"Negative base {u} raised to non-integer power {c}")
        derivatives = []
        coefficient = 1.0
        for m in range(self.order + 1):
            if coefficient == 0.0:
                derivatives.append(0.0)
            else:
                if u == 0.0 and c - m < 0:
                    raise DomainError(f"Power {c} is not differentiable at 0")
                derivatives.append(coefficient * u ** (c - m))
            coefficient *= c - m
        return self.compose(derivatives + [0.0] * (MAX_ORDER - self.order))

    def exp(self) -> "Jet":
        e = math.exp(self._scalar_value())
        return self.compose([e] * 4)

    def log(self) -> "Jet":
        u = self._scalar_value()
        if u <= 0.0:
            raise DomainError(f"log of non-positive value {u}")
        return self.compose([math.log(u), 1 / u, -1 / u**2, 2 / u**3])

    # Tensor algebra

    def transpose(self, *axes: int) -> "Jet":
        """Permute value axes; derivative axes stay last."""
        rank = self.value.ndim
        partials = tuple(
            np.transpose(p, tuple(axes) + tuple(range(rank, rank + m)))
            for m, p in enumerate(self.partials, 1)
        )
        return Jet(np.transpose(self.value, axes), partials, self.dim)

    @staticmethod
    def einsum(subscripts: str, *operands: "Jet") -> "Jet":
        """
        Contract jets with numpy einsum, propagating derivatives by Leibniz rule.

        Each derivative index of an order-m partial is routed to exactly one
        operand, summing over all routings.

        Args:
            subscripts: Explicit einsum subscripts (``"ij,jk->ik"``), lowercase only
            operands: Jets to contract

        Returns:
            Jet of the contraction, of order min(operand orders)
        """
        inputs, output = subscripts.replace(" ", "").split("->")
        specs = inputs.split(",")
        if len(specs) != len(operands):
            raise ValueError(f"{subscripts!r} expects {len(specs)} operands")
        order = min(op.order for op in operands)
        value = np.einsum(subscripts, *(op.value for op in operands))
        partials = []
        for m in range(1, order + 1):
            letters = _DERIVATIVE_LETTERS[:m]
            total = None
            for routing in itertools.product(range(len(operands)), repeat=m):
                terms = []
                arrays = []
                for index, (spec, op) in enumerate(zip(specs, operands)):
                    own = "".join(l for l, r in zip(letters, routing) if r == index)
                    terms.append(spec + own)
                    arrays.append(op.partial(len(own)))
                term = np.einsum(",".join(terms) + "->" + output + letters, *arrays)
                total = term if total is None else total + term
            partials.append(total)
        return Jet(np.asarray(value), tuple(partials), operands[0].dim)

    def inverse(self) -> "Jet":
        """Jet of the matrix inverse, from G X = I solved order by order."""
        g0 = self.value
        if g0.ndim != 2 or g0.shape[0] != g0.shape[1]:
            raise ValueError("inverse needs a square matrix jet")
        x0 = np.linalg.inv(g0)
        partials = []
        for m in range(1, self.order + 1):
            letters = _DERIVATIVE_LETTERS[:m]
            total = np.zeros(g0.shape + (self.dim,) * m)
            for mask in range(1, 2**m):
                own = "".join(l for b, l in enumerate(letters) if mask >> b & 1)
                rest = "".join(l for b, l in enumerate(letters) if not mask >> b & 1)
                x_rest = partials[len(rest) - 1] if rest else x0
                total = total + np.einsum(
                    f"ij{own},jk{rest}->ik{letters}",
                    self.partials[len(own) - 1],
                    x_rest,
                )
            partials.append(-np.einsum(f"ij,jk{letters}->ik{letters}", x0, total))
        return Jet(x0, tuple(partials), self.dim)


def _elementwise_product(a: Jet, b: Jet) -> Jet:
    if a.shape == b.shape:
        letters = _VALUE_LETTERS[: len(a.shape)]
        return Jet.einsum(f"{letters},{letters}->{letters}", a, b)
    if a.shape == ():
        letters = _VALUE_LETTERS[: len(b.shape)]
        return Jet.einsum(f",{letters}->{letters}", a, b)
    if b.shape == ():
        letters = _VALUE_LETTERS[: len(a.shape)]
        return Jet.einsum(f"{letters},->{letters}", a, b)
    raise ValueError(f"Cannot multiply jets of shapes {a.shape} and {b.shape}")


class ScalarField(ABC):
    """A real function on a chart that can report its jet at a point."""

    strategy: str = "analytic"

    @abstractmethod
    def jet(self, point: np.ndarray, order: int) -> Jet:
        """Jet of the field at ``point`` to ``order``."""

    def value(self, point: Sequence[float]) -> float:
        return float(self.jet(as_point(point), 0).value)


class ConstantField(ScalarField):
    """Field with the same value everywhere."""

    def __init__(self, constant: float):
        self.constant = float(constant)

    def jet(self, point: np.ndarray, order: int) -> Jet:
        return Jet.constant(self.constant, point.shape[0], order)

    def __repr__(self) -> str:
        return f"ConstantField({self.constant!r})"


class AffineField(ScalarField):
    """Field c0 + sum_i c_i x^i."""

    def __init__(self, offset: float, coefficients: Sequence[float]):
        self.offset = float(offset)
        self.coefficients = np.asarray(coefficients, dtype=float)

    def jet(self, point: np.ndarray, order: int) -> Jet:
        if point.shape != self.coefficients.shape:
            raise ValueError(
                f"Affine field of dimension {self.coefficients.size} "
                f"evaluated at a {point.size}-point"
            )
        dim = point.shape[0]
        partials = [np.zeros((dim,) * m) for m in range(1, order + 1)]
        if order >= 1:
            partials[0] = self.coefficients.copy()
        value = self.offset + float(self.coefficients @ point)
        return Jet(np.asarray(value), tuple(partials), dim)


class ScaledField(ScalarField):
    """A field multiplied by a constant factor; nested scalings collapse."""

    def __init__(self, field: ScalarField, factor: float):
        if isinstance(field, ScaledField):
            factor = field.factor * factor
            field = field.field
        self.field = field
        self.factor = float(factor)
        self.strategy = field.strategy

    def jet(self, point: np.ndarray, order: int) -> Jet:
        return self.field.jet(point, order) * self.factor


class FiniteDifferenceField(ScalarField):
    """Value-only function whose derivatives come from nested central differences."""

    strategy = "finite-difference"

    def __init__(self, func: Callable[[np.ndarray], float], step: float = 1e-3):
        if step <= 0:
            raise ValueError("Finite-difference step must be positive")
        self.func = func
        self.step = float(step)

    def jet(self, point: np.ndarray, order: int) -> Jet:
        if order == 0:
            value = float(self.func(point))
            if not math.isfinite(value):
                raise DomainError("Field is not finite at point", {"point": point.tolist()})
            return Jet(np.asarray(value), (), point.shape[0])
        return fd_jet(self.func, point, order, self.step)


def eval_jet(field: ScalarField, point: Sequence[float], order: int) -> Jet:
    """
    Evaluate a scalar field and its partials at a point.

    Args:
        field: Field to evaluate
        point: Chart coordinates
        order: Highest derivative order, 0..3

    Returns:
        Jet with symmetric partial arrays

    Raises:
        OrderError: If order is outside 0..3
        DomainError: If the field is undefined at the point
    """
    if not 0 <= order <= MAX_ORDER:
        raise OrderError(f"Jet order must be within 0..{MAX_ORDER}, got {order}")
    point = as_point(point)
    jet = field.jet(point, order)
    if not jet.is_finite():
        raise DomainError("Field is not finite at point", {"point": point.tolist()})
    return jet


def fd_jet(
    func: Callable[[np.ndarray], float],
    point: Sequence[float],
    order: int,
    h: float = 1e-3,
) -> Jet:
    """
    Partial derivatives by nested central differences.

    The step along axis i is ``h * max(1, |x_i|)``. Mixed and repeated
    partials use the product stencil, so a repeated index steps by 2h.

    Args:
        func: Value-only function of the point
        point: Chart coordinates
        order: Highest derivative order, 0..3
        h: Base step

    Returns:
        Jet with exactly symmetric partial arrays

    Raises:
        DomainError: If any stencil evaluation is undefined
    """
    if h <= 0:
        raise ValueError("Finite-difference step must be positive")
    if not 0 <= order <= MAX_ORDER:
        raise OrderError(f"Jet order must be within 0..{MAX_ORDER}, got {order}")
    point = as_point(point)
    dim = point.shape[0]
    steps = h * np.maximum(1.0, np.abs(point))
    samples: Dict[Tuple[int, ...], float] = {}

    def sample(offset: Tuple[int, ...]) -> float:
        if offset not in samples:
            value = float(func(point + np.asarray(offset, dtype=float) * steps))
            if not math.isfinite(value):
                raise DomainError(
                    "Field is not finite at stencil point",
                    {"point": point.tolist(), "offset": list(offset)},
                )
            samples[offset] = value
        return samples[offset]

    value = sample((0,) * dim)
    partials = []
    for m in range(1, order + 1):
        array = np.zeros((dim,) * m)
        for combo in itertools.combinations_with_replacement(range(dim), m):
            total = 0.0
            for signs in itertools.product((1, -1), repeat=m):
                offset = [0] * dim
                for axis, sign in zip(combo, signs):
                    offset[axis] += sign
                total += math.prod(signs) * sample(tuple(offset))
            estimate = total / math.prod(2.0 * steps[axis] for axis in combo)
            for permutation in set(itertools.permutations(combo)):
                array[permutation] = estimate
        partials.append(array)
    logger.debug(f"fd_jet used {len(samples)} evaluations at order {order}")
    return Jet(np.asarray(value), tuple(partials), dim)
