"""Tests for component tensors and defect norms."""

import numpy as np
import pytest

from statman.exceptions import ShapeError, SingularMetric, VarianceError
from statman.utils.tensor_core import (
    Metric,
    Tensor,
    contract,
    is_totally_symmetric,
    lower_first,
    lower_index,
    max_norm,
    raise_index,
    rel_defect,
    symmetrize,
    symmetry_defect,
    wedge_identity,
)


@pytest.fixture
def metric():
    """A non-diagonal positive definite metric in two dimensions."""
    return Metric.from_components([[2.0, 0.5], [0.5, 1.0]])


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(7)


class TestTensor:
    """Tests for tensor construction."""

    def test_type_counts_slots(self):
        """Test (upper, lower) counts."""
        t = Tensor.of(np.zeros((3, 3, 3, 3)), "ulll")

        assert t.type == (1, 3)
        assert t.rank == 4
        assert t.dim == 3

    def test_rank_must_match_markers(self):
        """Test that a marker count mismatch raises ShapeError."""
        with pytest.raises(ShapeError):
            Tensor.of(np.zeros((2, 2)), "lll")

    def test_slots_share_dimension(self):
        """Test that ragged slot sizes raise ShapeError."""
        with pytest.raises(ShapeError):
            Tensor.of(np.zeros((2, 3)), "ll")

    def test_unknown_marker(self):
        """Test that markers other than u/l raise VarianceError."""
        with pytest.raises(VarianceError):
            Tensor.of(np.zeros((2, 2)), "lx")

    def test_addition_requires_same_variance(self):
        """Test that adding (1,1) to (0,2) raises ShapeError."""
        with pytest.raises(ShapeError):
            Tensor.of(np.eye(2), "ul") + Tensor.of(np.eye(2), "ll")


class TestMetric:
    """Tests for metric construction."""

    def test_inverse_and_signature(self, metric):
        """Test that g g^-1 = I and the signature is Riemannian."""
        np.testing.assert_allclose(
            metric.g.components @ metric.g_inv.components, np.eye(2), atol=1e-14
        )
        assert metric.signature == (2, 0)
        assert metric.det == pytest.approx(1.75)

    def test_lorentzian_signature(self):
        """Test signature counting for an indefinite metric."""
        assert Metric.from_components(np.diag([1.0, -1.0, 1.0])).signature == (2, 1)

    def test_singular_metric(self):
        """Test that a rank-deficient metric raises SingularMetric."""
        with pytest.raises(SingularMetric):
            Metric.from_components([[1.0, 1.0], [1.0, 1.0]])

    def test_asymmetric_metric(self):
        """Test that an asymmetric metric raises ShapeError."""
        with pytest.raises(ShapeError):
            Metric.from_components([[1.0, 0.2], [0.0, 1.0]])


class TestIndexOperations:
    """Tests for contraction and raising/lowering."""

    def test_contract_trace(self):
        """Test contraction of a (1,1) tensor to its trace."""
        t = Tensor.of([[1.0, 2.0], [3.0, 4.0]], "ul")

        assert float(contract(t, 0, 1).components) == pytest.approx(5.0)

    def test_contract_rejects_two_lower_slots(self):
        """Test that contracting two lower slots raises VarianceError."""
        with pytest.raises(VarianceError):
            contract(Tensor.of(np.eye(2), "ll"), 0, 1)

    def test_raise_then_lower(self, metric, rng):
        """Test that raising and lowering a slot round-trips."""
        t = Tensor.of(rng.normal(size=(2, 2, 2)), "lll")
        raised = raise_index(t, 1, metric)

        assert raised.variance == ("l", "u", "l")
        assert rel_defect(lower_index(raised, 1, metric), t) < 1e-14

    def test_raise_upper_slot_rejected(self, metric):
        """Test that raising an upper slot raises VarianceError."""
        with pytest.raises(VarianceError):
            raise_index(Tensor.of(np.eye(2), "ul"), 0, metric)


class TestSymmetry:
    """Tests for symmetrization and symmetry defects."""

    def test_symmetrize_is_idempotent(self, rng):
        """Test that a symmetrized tensor has zero symmetry defect."""
        t = Tensor.of(rng.normal(size=(3, 3, 3)), "lll")
        sym = symmetrize(t)

        assert symmetry_defect(sym) < 1e-14
        assert rel_defect(symmetrize(sym), sym) < 1e-14

    def test_partial_symmetrization(self, rng):
        """Test symmetrization over the last two slots only."""
        t = Tensor.of(rng.normal(size=(2, 2, 2)), "ull")
        sym = symmetrize(t, (1, 2))

        np.testing.assert_allclose(sym.components, np.transpose(sym.components, (0, 2, 1)))

    def test_is_totally_symmetric(self, rng):
        """Test the predicate on a random tensor and its symmetrization."""
        t = Tensor.of(rng.normal(size=(2, 2, 2)), "lll")

        assert not is_totally_symmetric(t)
        assert is_totally_symmetric(symmetrize(t))

    def test_mixed_variance_slots_rejected(self):
        """Test that symmetrizing an upper with a lower slot raises."""
        with pytest.raises(VarianceError):
            symmetrize(Tensor.of(np.eye(2), "ul"))


class TestDefects:
    """Tests for relative defects and curvature helpers."""

    def test_rel_defect_examples(self):
        """Test the normalization by max(1, |a|, |b|)."""
        assert rel_defect(np.array([2.0]), np.array([0.0])) == pytest.approx(1.0)
        assert rel_defect(np.array([0.5]), np.array([-0.5])) == pytest.approx(1.0)
        assert rel_defect(np.array([1e-3]), np.array([0.0])) == pytest.approx(1e-3)

    def test_rel_defect_shape_mismatch(self):
        """Test that mismatched shapes raise ShapeError."""
        with pytest.raises(ShapeError):
            rel_defect(np.zeros(2), np.zeros(3))

    def test_rel_defect_variance_mismatch(self):
        """Test that mismatched variances raise ShapeError."""
        with pytest.raises(ShapeError):
            rel_defect(Tensor.of(np.eye(2), "ul"), Tensor.of(np.eye(2), "lu"))

    def test_max_norm(self):
        """Test the largest absolute component."""
        assert max_norm(np.array([[1.0, -3.0], [2.0, 0.0]])) == 3.0

    def test_wedge_identity_trace(self, rng):
        """Test that contracting A ^ Id over (l, i) gives (n - 1) A."""
        a = rng.normal(size=(3, 3))
        wedge = wedge_identity(a)

        np.testing.assert_allclose(np.einsum("iijk->jk", wedge), 2.0 * a, atol=1e-14)
        np.testing.assert_allclose(wedge, -np.transpose(wedge, (0, 2, 1, 3)), atol=1e-14)

    def test_lower_first(self, rng):
        """Test that lowering with the identity only moves the slot."""
        t = rng.normal(size=(2, 2, 2, 2))

        np.testing.assert_allclose(lower_first(t, np.eye(2)), np.transpose(t, (1, 2, 3, 0)))
