"""Unit tests for jets and scalar fields."""

import math

import numpy as np
import pytest

from statman.exceptions import DomainError, OrderError
from statman.utils.expression import ExpressionField
from statman.utils.jets import (
    AffineField,
    ConstantField,
    FiniteDifferenceField,
    Jet,
    ScaledField,
    eval_jet,
    fd_jet,
)


@pytest.fixture
def cubic_monomial():
    """f(x1, x2) = x1^2 x2."""
    return ExpressionField.parse("x1^2*x2", dim=2)


class TestEvalJet:
    """Tests for exact jets of expression fields."""

    def test_value_gradient_hessian(self, cubic_monomial):
        """Test the jet of x1^2 x2 at (2, 3)."""
        jet = eval_jet(cubic_monomial, [2.0, 3.0], 2)

        assert float(jet.value) == pytest.approx(12.0)
        np.testing.assert_allclose(jet.partials[0], [12.0, 4.0])
        np.testing.assert_allclose(jet.partials[1], [[6.0, 4.0], [4.0, 0.0]])

    def test_third_order(self, cubic_monomial):
        """Test that only the (1,1,2) third partials survive."""
        jet = eval_jet(cubic_monomial, [2.0, 3.0], 3)
        expected = np.zeros((2, 2, 2))
        for index in [(0, 0, 1), (0, 1, 0), (1, 0, 0)]:
            expected[index] = 2.0

        np.testing.assert_allclose(jet.partials[2], expected, atol=1e-12)

    def test_order_above_three_rejected(self, cubic_monomial):
        """Test that order 4 raises OrderError."""
        with pytest.raises(OrderError):
            eval_jet(cubic_monomial, [1.0, 1.0], 4)

    def test_order_zero_has_no_partials(self, cubic_monomial):
        """Test that an order-0 jet carries only the value."""
        jet = eval_jet(cubic_monomial, [1.0, 2.0], 0)

        assert jet.order == 0
        assert float(jet.value) == pytest.approx(2.0)

    def test_non_finite_point_rejected(self, cubic_monomial):
        """Test that NaN coordinates raise DomainError."""
        with pytest.raises(DomainError):
            eval_jet(cubic_monomial, [float("nan"), 1.0], 1)

    def test_partials_are_symmetric(self):
        """Test symmetry of mixed partials for a non-polynomial field."""
        field = ExpressionField.parse("exp(x1*x2)*sin(x3)/(1 + x1^2)", dim=3)
        jet = eval_jet(field, [0.3, -0.7, 1.1], 3)

        np.testing.assert_allclose(jet.partials[1], jet.partials[1].T, atol=1e-12)
        third = jet.partials[2]
        for axes in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
            np.testing.assert_allclose(third, np.transpose(third, axes), atol=1e-12)

    def test_composition_chain_rule(self):
        """Test exp(sin(x)) derivatives against closed forms."""
        field = ExpressionField.parse("exp(sin(x1))", dim=1)
        x = 0.4
        jet = eval_jet(field, [x], 3)
        f = math.exp(math.sin(x))
        c, s = math.cos(x), math.sin(x)

        assert float(jet.partials[0][0]) == pytest.approx(f * c)
        assert float(jet.partials[1][0, 0]) == pytest.approx(f * (c * c - s))
        assert float(jet.partials[2][0, 0, 0]) == pytest.approx(
            f * (c**3 - 3 * s * c - c)
        )


class TestJetAlgebra:
    """Tests for jet arithmetic and tensor operations."""

    def test_product_rule(self):
        """Test d(uv) = u'v + uv' through einsum."""
        point = np.array([0.5, 2.0])
        u = Jet.variable(point, 0)
        v = Jet.variable(point, 1)
        product = u * v

        assert float(product.value) == pytest.approx(1.0)
        np.testing.assert_allclose(product.partials[0], [2.0, 0.5])
        np.testing.assert_allclose(product.partials[1], [[0.0, 1.0], [1.0, 0.0]])

    def test_division_by_zero(self):
        """Test that dividing by a vanishing jet raises DomainError."""
        point = np.array([0.0, 1.0])
        with pytest.raises(DomainError):
            Jet.constant(1.0, 2) / Jet.variable(point, 0)

    def test_inverse_matches_finite_differences(self):
        """Test the jet of a matrix inverse against differenced inverses."""
        point = np.array([0.4, -0.3])
        fields = [
            ExpressionField.parse(src, dim=2)
            for src in ["2 + x1^2", "x1*x2", "x1*x2", "3 + sin(x2)"]
        ]

        def matrix(p):
            return np.array([f.value(p) for f in fields]).reshape(2, 2)

        jet = Jet.stack([f.jet(point, 2) for f in fields], (2, 2)).inverse()
        h = 1e-5
        for axis in range(2):
            step = np.zeros(2)
            step[axis] = h
            numeric = (np.linalg.inv(matrix(point + step)) - np.linalg.inv(matrix(point - step))) / (2 * h)
            np.testing.assert_allclose(jet.partials[0][:, :, axis], numeric, atol=1e-8)
        np.testing.assert_allclose(jet.value, np.linalg.inv(matrix(point)))

    def test_einsum_trace_keeps_derivatives(self):
        """Test that a contraction commutes with differentiation."""
        point = np.array([1.0, 2.0])
        x, y = Jet.variable(point, 0), Jet.variable(point, 1)
        matrix = Jet.stack([x * x, x * y, x * y, y * y], (2, 2))
        trace = Jet.einsum("ii->", matrix)

        assert float(trace.value) == pytest.approx(5.0)
        np.testing.assert_allclose(trace.partials[0], [2.0, 4.0])

    def test_transpose_moves_value_axes_only(self):
        """Test that transposing leaves derivative axes last."""
        point = np.array([1.0, 2.0])
        x, y = Jet.variable(point, 0), Jet.variable(point, 1)
        matrix = Jet.stack([x, y * 2.0, x * 3.0, y], (2, 2))
        flipped = matrix.transpose(1, 0)

        np.testing.assert_allclose(flipped.value, matrix.value.T)
        np.testing.assert_allclose(flipped.partials[0][0, 1], matrix.partials[0][1, 0])

    def test_derivative_shifts_order(self):
        """Test that derivative() drops one order and adds one axis."""
        jet = eval_jet(ExpressionField.parse("x1^3", dim=1), [2.0], 3)
        first = jet.derivative()

        assert first.order == 2
        np.testing.assert_allclose(first.value, [12.0])
        np.testing.assert_allclose(first.partials[0], [[12.0]])


class TestFields:
    """Tests for constant, affine, scaled and finite-difference fields."""

    def test_constant_field(self):
        """Test that constant fields have vanishing partials."""
        jet = eval_jet(ConstantField(2.5), [1.0, 2.0, 3.0], 2)

        assert float(jet.value) == 2.5
        assert not np.any(jet.partials[1])

    def test_affine_field(self):
        """Test affine value and gradient."""
        jet = eval_jet(AffineField(1.0, [2.0, -1.0]), [3.0, 4.0], 2)

        assert float(jet.value) == pytest.approx(3.0)
        np.testing.assert_allclose(jet.partials[0], [2.0, -1.0])

    def test_scaled_field_collapses(self):
        """Test that nested scalings multiply into one factor."""
        inner = ConstantField(3.0)
        scaled = ScaledField(ScaledField(inner, -1.0), 0.5)

        assert scaled.field is inner
        assert scaled.factor == -0.5

    def test_fd_jet_matches_exact(self, cubic_monomial):
        """Test nested central differences against exact partials."""
        point = [1.3, -0.4]
        exact = eval_jet(cubic_monomial, point, 3)
        approx = fd_jet(cubic_monomial.value, point, 3, h=1e-3)

        for m in range(3):
            np.testing.assert_allclose(approx.partials[m], exact.partials[m], atol=1e-5)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_fd_jet_converges_quadratically(self, order):
        """Test that halving the step cuts the error of every partial order at least threefold."""
        field = ExpressionField.parse("exp(x1)*sin(x2) + x1*x2^2", dim=2)
        point = [0.3, 0.7]
        exact = eval_jet(field, point, 3).partials[order - 1]
        errors = [
            np.max(np.abs(fd_jet(field.value, point, 3, h=h).partials[order - 1] - exact))
            for h in (1e-2, 5e-3)
        ]

        assert errors[0] / errors[1] >= 3.0

    def test_fd_jet_is_symmetric(self):
        """Test that finite-difference partials are exactly symmetric."""
        field = FiniteDifferenceField(lambda p: math.exp(p[0] * p[1]) + p[1] ** 3, step=1e-3)
        jet = eval_jet(field, [0.2, 0.5], 3)

        np.testing.assert_array_equal(jet.partials[1], jet.partials[1].T)
        np.testing.assert_array_equal(jet.partials[2], np.transpose(jet.partials[2], (2, 0, 1)))

    def test_fd_jet_reports_domain_errors(self):
        """Test that undefined stencil values raise DomainError."""
        with pytest.raises(DomainError):
            fd_jet(lambda p: math.log(p[0]) if p[0] > 0 else float("nan"), [0.0005], 1, h=1e-3)

    def test_fd_jet_rejects_bad_step(self):
        """Test that a non-positive step raises ValueError."""
        with pytest.raises(ValueError):
            fd_jet(lambda p: p[0], [1.0], 1, h=0.0)
