"""Tests for curvature tensors, their identities and projective objects."""

import math

import numpy as np
import pytest

from statman.exceptions import DimensionError
from statman.services.curvature_service import (
    DERIVATIVE,
    covariant_derivative,
    curvature_pack,
    curvature_state,
    div_K,
    identity_defects,
    projective_curvature,
    projective_law_defects,
    projective_pack,
    projective_transform,
    ricci,
    ricci_decompositions,
    riemann,
    riemann_decomposed,
    statistical_curvature,
)
from statman.services.structure_service import connection_field, levi_civita, local_geometry
from statman.utils.expression import ExpressionField
from statman.utils.tensor_core import Tensor, rel_defect, wedge_identity
from tests.conftest import chart_points, random_affine_chart, random_constant_chart

TOL = 1e-8
LAW_SEEDS = {"sphere-levi-civita": 31, "constant-nabla": 32, "affine-nabla": 33}


def random_potential(rng: np.random.Generator, dim: int) -> ExpressionField:
    """Polynomial-plus-exponential potential with random coefficients."""
    terms = []
    for i in range(1, dim + 1):
        terms.append(f"({rng.uniform(-0.5, 0.5):.6f})*x{i}^2")
        terms.append(f"({rng.uniform(-0.3, 0.3):.6f})*x{i}^3")
        for j in range(i + 1, dim + 1):
            terms.append(f"({rng.uniform(-0.5, 0.5):.6f})*x{i}*x{j}")
    terms.append(f"exp(({rng.uniform(-0.3, 0.3):.6f})*x1)")
    return ExpressionField.parse(" + ".join(terms), dim=dim)


class TestKnownCurvature:
    """Tests against closed-form curvature."""

    def test_sphere_riemann(self, sphere_chart):
        """Test R(d_theta, d_phi) d_phi = sin^2(theta) d_theta on the unit sphere."""
        theta = 1.1
        R = riemann(connection_field(sphere_chart, "levi_civita"), [theta, 0.4]).components

        assert R[0, 0, 1, 1] == pytest.approx(math.sin(theta) ** 2)
        assert R[1, 0, 1, 0] == pytest.approx(-1.0)

    def test_sphere_ricci_is_metric(self, sphere_chart):
        """Test Ric = g for the unit sphere."""
        point = [0.9, 2.0]
        Ric = ricci(riemann(connection_field(sphere_chart, "levi_civita"), point))
        g = local_geometry(sphere_chart, point).metric.value

        np.testing.assert_allclose(Ric.components, g, atol=1e-12)

    def test_hyperbolic_ricci(self, hyperbolic_chart):
        """Test Ric = -g for the half plane."""
        point = [0.3, 1.2]
        Ric = ricci(riemann(connection_field(hyperbolic_chart, "levi_civita"), point))
        g = local_geometry(hyperbolic_chart, point).metric.value

        np.testing.assert_allclose(Ric.components, -g, atol=1e-12)

    def test_normal_levi_civita_ricci(self, normal_chart):
        """Test Ric_hat = diag(-1/2, -1) at (0, 1)."""
        Ric = ricci(riemann(connection_field(normal_chart, "levi_civita"), [0.0, 1.0]))

        np.testing.assert_allclose(Ric.components, np.diag([-0.5, -1.0]), atol=1e-12)

    def test_normal_dual_pair_is_flat(self, normal_chart):
        """Test that nabla and nabla* of the normal family are flat."""
        for kind in ("nabla", "nabla_star"):
            R = riemann(connection_field(normal_chart, kind), [0.4, 1.3]).components
            np.testing.assert_allclose(R, 0.0, atol=1e-12)

    def test_normal_alpha_curvature_scales(self, normal_chart):
        """Test R^alpha = (1 - alpha^2) R_hat for the normal family."""
        point = [-0.2, 0.8]
        R_hat = riemann(connection_field(normal_chart, "levi_civita"), point).components
        for alpha in (-0.5, 0.25, 0.5):
            R_alpha = riemann(connection_field(normal_chart, "alpha", alpha), point).components
            np.testing.assert_allclose(R_alpha, (1 - alpha**2) * R_hat, atol=1e-12)

    def test_flat_cubic_is_flat(self, flat_cubic_chart):
        """Test that a constant cubic form on one axis gives R = 0."""
        pack = curvature_pack(flat_cubic_chart, [0.3, -0.6])

        np.testing.assert_allclose(pack.R.components, 0.0, atol=1e-15)
        np.testing.assert_allclose(pack.tau.components, [-1.0, 0.0])


class TestDecompositions:
    """Tests for curvature assembled from Levi-Civita pieces."""

    @pytest.mark.parametrize(
        "which,kind,alpha",
        [("R", "nabla", None), ("R*", "nabla_star", None), ("R^alpha", "alpha", 0.3)],
    )
    def test_decomposed_matches_direct(self, gamma_chart, which, kind, alpha):
        """Test R, R* and R^alpha against curvature from Gamma."""
        for point in chart_points(gamma_chart, 3):
            direct = riemann(connection_field(gamma_chart, kind, alpha), point)
            assembled = riemann_decomposed(gamma_chart, point, which, alpha)
            assert rel_defect(direct, assembled) < TOL

    def test_unknown_curvature_name(self, gamma_chart):
        """Test that an unknown curvature name raises ValueError."""
        with pytest.raises(ValueError):
            riemann_decomposed(gamma_chart, [2.0, 1.0], "Q")

    def test_alpha_curvature_needs_alpha(self, gamma_chart):
        """Test that R^alpha without alpha raises ValueError."""
        with pytest.raises(ValueError):
            riemann_decomposed(gamma_chart, [2.0, 1.0], "R^alpha")

    def test_ricci_decompositions_random_chart(self):
        """Test every Ricci decomposition on a random chart with non-constant cubic form."""
        chart = random_affine_chart(np.random.default_rng(11), 3)
        for point in chart_points(chart, 4):
            defects = ricci_decompositions(chart, point)
            assert len(defects) == 9
            assert max(defects.values()) < TOL, defects

    def test_half_difference_nabla_form_on_normal_family(self, normal_chart):
        """Test (Ric - Ric*)/2 = div K - nabla tau - 2(tau K - g(K,K)) with tau K - g(K,K) != 0."""
        s = curvature_state(normal_chart, [0.0, 1.0])
        tau_K = np.einsum("l,ljk->jk", s.tau, s.K)
        g_KK = np.einsum("ajb,bka->jk", s.K, s.K)

        np.testing.assert_allclose(s.div_K_nabla - s.nabla_tau, np.diag([1.0, 2.0]), atol=1e-12)
        np.testing.assert_allclose(tau_K - g_KK, np.diag([0.5, 1.0]), atol=1e-12)
        np.testing.assert_allclose(0.5 * (s.Ric - s.Ric_star), 0.0, atol=1e-12)
        assert ricci_decompositions(normal_chart, [0.0, 1.0])[
            "half difference of Ricci (nabla form)"
        ] < 1e-12

    def test_div_K_unknown_connection(self, gamma_chart):
        """Test that div K rejects connections other than levi_civita and nabla."""
        with pytest.raises(ValueError):
            div_K(gamma_chart, [2.0, 1.0], "nabla_star")

    def test_statistical_curvature_antisymmetry(self):
        """Test S(X,Y,Z,W) = -S(X,Y,W,Z)."""
        chart = random_affine_chart(np.random.default_rng(5), 3)
        S = statistical_curvature(chart, [0.1, -0.2, 0.3]).components

        np.testing.assert_allclose(S, -np.swapaxes(S, 2, 3), atol=1e-12)


class TestIdentitySuite:
    """Tests that every identity holds on valid statistical manifolds."""

    @pytest.mark.parametrize(
        "fixture_name",
        ["sphere_chart", "normal_chart", "gamma_chart", "gamma_natural_chart", "euclidean3_chart"],
    )
    def test_builtin_charts(self, fixture_name, request):
        """Test the identity suite on built-in families."""
        chart = request.getfixturevalue(fixture_name)
        for point in chart_points(chart, 3):
            for identity in identity_defects(chart, point):
                limit = TOL * 10 if identity.tier == DERIVATIVE else TOL
                assert identity.defect <= limit, identity

    @pytest.mark.parametrize("dim", [2, 3])
    def test_random_charts(self, dim):
        """Test the identity suite on random constant and affine cubic forms."""
        rng = np.random.default_rng(100 + dim)
        for chart in (random_constant_chart(rng, dim), random_affine_chart(rng, dim)):
            for point in chart_points(chart, 3, seed=dim):
                for identity in identity_defects(chart, point):
                    limit = TOL * 10 if identity.tier == DERIVATIVE else TOL
                    assert identity.defect <= limit, identity

    def test_two_dimensional_suite_checks_vanishing_P(self, sphere_chart):
        """Test that n = 2 adds the vanishing projective curvature identity."""
        names = {identity.name for identity in identity_defects(sphere_chart, [1.0, 1.0])}

        assert "P vanishes in dimension 2 (nabla)" in names

    def test_suite_includes_projective_laws(self, normal_chart):
        """Test that each connection gets the projective laws, Cot in the derivative tier."""
        identities = {item.name: item for item in identity_defects(normal_chart, [0.2, 1.1])}

        for label in ("nabla", "nabla*", "levi-civita"):
            assert f"projective curvature invariant ({label})" in identities
            assert f"schouten transformation ({label})" in identities
            assert identities[f"cotton transformation ({label})"].tier == DERIVATIVE
            assert identities[f"schouten transformation ({label})"].defect < TOL

    def test_three_dimensional_suite_skips_vanishing_P(self, euclidean3_chart):
        """Test that n = 3 has no vanishing projective curvature identity."""
        names = {identity.name for identity in identity_defects(euclidean3_chart, [0.0, 0.0, 0.0])}

        assert not any(name.startswith("P vanishes") for name in names)


class TestProjective:
    """Tests for projective curvature, Cotton tensor and transformation laws."""

    def test_contracted_bianchi(self):
        """Test delta P = (n - 2) Cot and delta R = (n - 1) Cot with Cot non-zero."""
        chart = random_affine_chart(np.random.default_rng(21), 3)
        pack = projective_pack(connection_field(chart, "nabla"), [0.2, 0.1, -0.3])

        assert np.max(np.abs(pack.cotton)) > 1e-6
        assert rel_defect(pack.delta_P, pack.cotton) < 1e-7
        assert rel_defect(pack.delta_R, 2 * pack.cotton) < 1e-7

    def test_projective_curvature_trace_free(self):
        """Test that P has vanishing Ricci contraction."""
        chart = random_constant_chart(np.random.default_rng(8), 3)
        R = riemann(connection_field(chart, "nabla"), [0.0, 0.0, 0.0])
        P = projective_curvature(R, ricci(R))

        np.testing.assert_allclose(np.einsum("iijk->jk", P.components), 0.0, atol=1e-12)

    def test_projective_curvature_of_space_form(self, sphere_chart):
        """Test that P vanishes for a metric of constant curvature."""
        R = riemann(connection_field(sphere_chart, "levi_civita"), [1.2, 0.0])

        np.testing.assert_allclose(projective_curvature(R, ricci(R)).components, 0.0, atol=1e-12)

    def test_projective_curvature_dimension_one(self):
        """Test that n = 1 raises DimensionError."""
        R = Tensor.of(np.zeros((1, 1, 1, 1)), "ulll")
        with pytest.raises(DimensionError):
            projective_curvature(R, ricci(R))

    @pytest.mark.parametrize("case", ["sphere-levi-civita", "constant-nabla", "affine-nabla"])
    def test_transformation_laws(self, case, sphere_chart):
        """Test the laws for P, the Schouten tensor and Cot under ten random potentials."""
        rng = np.random.default_rng(LAW_SEEDS[case])
        if case == "sphere-levi-civita":
            conn, point = connection_field(sphere_chart, "levi_civita"), [1.0, 0.7]
        elif case == "constant-nabla":
            conn, point = connection_field(random_constant_chart(rng, 3), "nabla"), [0.1, 0.2, 0.3]
        else:
            conn, point = connection_field(random_affine_chart(rng, 3), "nabla"), [-0.2, 0.4, 0.1]
        dim = len(point)
        for _ in range(10):
            defects = projective_law_defects(conn, random_potential(rng, dim), point)
            assert max(defects.values()) < 1e-8, defects

    def test_transformed_connection_changes(self):
        """Test that the transformed Schouten tensor actually differs."""
        rng = np.random.default_rng(4)
        conn = connection_field(random_constant_chart(rng, 3), "nabla")
        potential = random_potential(rng, 3)
        point = [0.1, 0.2, 0.3]
        base = projective_pack(conn, point)
        moved = projective_pack(projective_transform(conn, potential), point)

        assert rel_defect(moved.schouten, base.schouten) > 1e-3
        assert rel_defect(moved.P, base.P) < 1e-10


def test_levi_civita_is_metric(gamma_chart):
    """Test that the covariant derivative of g vanishes for the Levi-Civita connection."""
    point = [2.5, 1.5]
    metric = local_geometry(gamma_chart, point).metric
    nabla_g = covariant_derivative(metric, "ll", levi_civita(gamma_chart, point))

    assert nabla_g.variance == ("l", "l", "l")
    np.testing.assert_allclose(nabla_g.components, 0.0, atol=1e-12)


def test_space_form_wedge(hyperbolic_chart):
    """Test R = -(g ^ Id) on the half plane."""
    point = [0.0, 0.8]
    R = riemann(connection_field(hyperbolic_chart, "levi_civita"), point).components
    g = local_geometry(hyperbolic_chart, point).metric.value

    np.testing.assert_allclose(R, -wedge_identity(g), atol=1e-10)
