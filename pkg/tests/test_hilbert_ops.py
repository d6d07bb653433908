"""
Tests for operator trees, monotone maps and condition moduli.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from error_handler import SpecValidationError
from hilbert_ops import (
    AffineMap,
    ClaimedClass,
    Compose,
    ConditionModulus,
    ConstantMap,
    ConvexCombine,
    MonotoneOpSpec,
    ProjectAffine,
    ProjectBall,
    ProjectBox,
    ProjectHalfspace,
    as_point,
    bauschke_modulus,
    compose_in_order,
    contraction_factor,
    contraction_from_monotone,
    cyclic_orders,
    default_projection_sqne,
    fixed_point_residual,
    identity,
    line_pair_modulus,
    sqne_chain_modulus,
    sqne_condition_modulus,
    verify_monotone,
    verify_operator,
)

coords = st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=2)


class TestPoints:
    def test_as_point_validates(self):
        assert as_point([1, 2]).dtype == np.float64
        with pytest.raises(SpecValidationError):
            as_point([])
        with pytest.raises(SpecValidationError):
            as_point([1.0, float("nan")])
        with pytest.raises(SpecValidationError):
            as_point([1.0, 2.0], dim=3)

    def test_dimension_mismatch_on_call(self, ball):
        with pytest.raises(SpecValidationError, match="dimension mismatch"):
            ball(np.zeros(3))


class TestProjections:
    def test_ball_projection(self, ball):
        assert np.allclose(ball(np.array([2.0, 0.0])), [0.5, 0.0])
        inside = np.array([0.1, -0.2])
        assert np.array_equal(ball(inside), inside)

    def test_box_projection(self):
        box = ProjectBox(np.array([-1.0, 0.0]), np.array([1.0, 2.0]))
        assert np.allclose(box(np.array([3.0, -1.0])), [1.0, 0.0])

    def test_box_rejects_inverted_corners(self):
        with pytest.raises(SpecValidationError):
            ProjectBox(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def test_halfspace_projection(self, halfspace):
        assert np.allclose(halfspace(np.array([2.0, 3.0])), [0.0, 3.0])
        assert np.allclose(halfspace(np.array([-2.0, 3.0])), [-2.0, 3.0])

    def test_affine_line_projection(self):
        line = ProjectAffine(np.array([[1.0, 1.0]]), np.zeros(2))
        assert np.allclose(line(np.array([1.0, 0.0])), [0.5, 0.5])

    @pytest.mark.property
    @given(coords, coords)
    @settings(max_examples=200, derandomize=True)
    def test_projections_are_nonexpansive(self, x, y):
        x, y = np.array(x), np.array(y)
        for op in (
            ProjectBall(np.zeros(2), 1.0),
            ProjectHalfspace(np.array([1.0, 2.0]), 0.5),
            ProjectAffine(np.array([[0.6, 0.8]]), np.array([1.0, 0.0])),
        ):
            assert np.linalg.norm(op(x) - op(y)) <= np.linalg.norm(x - y) + 1e-12

    def test_projection_to_fixed_set_is_projection(self, ball):
        x = np.array([3.0, 4.0])
        assert np.allclose(ball.to_fixed_set(x), [0.3, 0.4])


class TestCombinators:
    def test_compose_last_part_acts_first(self, halfspace):
        shift = AffineMap(np.eye(2), np.array([1.0, 0.0]), ClaimedClass.nonexpansive())
        # halfspace(shift(x))
        op = Compose((halfspace, shift))
        assert np.allclose(op(np.array([-0.5, 0.0])), [0.0, 0.0])

    def test_empty_composition_rejected(self):
        with pytest.raises(SpecValidationError):
            Compose(())

    def test_convex_combination(self, ball, halfspace):
        op = ConvexCombine(0.5, ball, halfspace)
        x = np.array([2.0, 0.0])
        assert np.allclose(op(x), 0.5 * ball(x) + 0.5 * halfspace(x))

    def test_compose_in_order(self, halfspace):
        second = ProjectHalfspace(np.array([0.0, 1.0]), 0.0)
        op = compose_in_order([halfspace, second], [1, 0])
        assert np.allclose(op(np.array([1.0, 1.0])), [0.0, 0.0])

    def test_cyclic_orders(self):
        assert cyclic_orders(3) == [[0, 1, 2], [1, 2, 0], [2, 0, 1]]

    def test_compose_to_fixed_set(self, halfspace):
        second = ProjectHalfspace(np.array([0.0, 1.0]), 0.0)
        op = Compose((halfspace, second))
        y = op.to_fixed_set(np.array([1.0, 2.0]))
        assert fixed_point_residual(op, y) <= 1e-10


class TestAffineMaps:
    def test_claim_derived_from_spectrum(self):
        G = AffineMap(0.5 * np.eye(2), np.zeros(2))
        assert G.claimed.is_contraction
        assert G.claimed.lipschitz == pytest.approx(0.5)

    def test_expansive_map_rejected(self):
        with pytest.raises(SpecValidationError, match="expansive"):
            AffineMap(2.0 * np.eye(2), np.zeros(2))

    def test_bad_witness_rejected(self):
        with pytest.raises(SpecValidationError):
            AffineMap(0.5 * np.eye(2), np.ones(2), None, np.zeros(2))

    def test_to_fixed_set(self, make_contraction):
        G = make_contraction(0.5)
        assert np.allclose(G.to_fixed_set(np.zeros(2)), [0.4, 0.2])

    def test_constant_map(self):
        c = ConstantMap(np.array([1.0, 2.0]))
        assert c.claimed.lipschitz == 0.0
        assert np.allclose(c(np.zeros(2)), [1.0, 2.0])

    def test_identity_is_nonexpansive(self):
        assert identity(3).claimed.lipschitz == 1.0

    def test_verify_operator_passes_true_claim(self, make_contraction):
        audit = verify_operator(make_contraction(0.3), samples=200, seed=1)
        assert audit.passed
        assert audit.worst_ratio <= 0.3 + 1e-9

    def test_verify_operator_flags_false_claim(self):
        lying = AffineMap(0.9 * np.eye(2), np.zeros(2), ClaimedClass.contraction(0.5))
        assert not verify_operator(lying, samples=100, seed=1).passed

    def test_contraction_claim_range(self):
        with pytest.raises(SpecValidationError):
            ClaimedClass.contraction(1.0)


class TestMonotone:
    @pytest.mark.parametrize("kappa", [1.0, 1.5, 2.0, 3.0, 4.0])
    @pytest.mark.parametrize("ratio", [0.1, 0.3, 0.5, 0.7, 1.0])
    def test_contraction_factor_formula(self, kappa, ratio):
        """Measured Lipschitz ratio of I - mu F stays below sqrt(1 - mu(2 eta - mu kappa^2))."""
        eta = ratio * kappa
        rng = np.random.default_rng(int(kappa * 100 + ratio * 10))
        # F = eta I + (kappa - eta) times a skew rotation part keeps both constants exact
        matrix = np.array([[eta, -math.sqrt(kappa ** 2 - eta ** 2)],
                           [math.sqrt(kappa ** 2 - eta ** 2), eta]])
        F = MonotoneOpSpec(matrix, np.zeros(2), kappa, eta)
        for frac in (0.1, 0.3, 0.5, 0.7, 0.9):
            mu = frac * F.mu_upper()
            G = contraction_from_monotone(F, mu)
            tau = contraction_factor(kappa, eta, mu)
            assert G.claimed.lipschitz == pytest.approx(tau)
            xs = rng.normal(size=(1000, 2))
            ys = rng.normal(size=(1000, 2))
            for x, y in zip(xs, ys):
                assert np.linalg.norm(G(x) - G(y)) <= tau * np.linalg.norm(x - y) + 1e-9

    def test_mu_out_of_range(self):
        F = MonotoneOpSpec.quadratic(np.eye(2), np.zeros(2))
        with pytest.raises(SpecValidationError, match="mu"):
            contraction_from_monotone(F, 2.0)

    def test_quadratic_constants_and_zero(self):
        F = MonotoneOpSpec.quadratic([[2.0, 0.0], [0.0, 1.0]], [2.0, 1.0])
        assert F.kappa == pytest.approx(2.0)
        assert F.eta == pytest.approx(1.0)
        assert np.allclose(F.zero(), [1.0, 1.0])
        assert verify_monotone(F, samples=200, seed=3)

    def test_non_symmetric_quadratic_rejected(self):
        with pytest.raises(SpecValidationError):
            MonotoneOpSpec.quadratic([[1.0, 1.0], [0.0, 1.0]], [0.0, 0.0])

    def test_eta_above_kappa_rejected(self):
        with pytest.raises(SpecValidationError):
            MonotoneOpSpec(np.eye(2), np.zeros(2), 1.0, 2.0)


class TestConditionModuli:
    def test_default_projection_sqne(self):
        assert default_projection_sqne(2, 0.4) == pytest.approx(0.04)

    def test_line_pair_value(self):
        rho = line_pair_modulus(math.pi / 6)
        assert rho(2, 0.3) == pytest.approx(0.1)

    def test_bauschke_divides_eps(self):
        rho = bauschke_modulus(line_pair_modulus(math.pi / 6), 2)
        assert rho(2, 0.5) == pytest.approx(1 / 30)

    def test_modulus_rejects_non_positive_eps(self):
        with pytest.raises(SpecValidationError):
            line_pair_modulus(0.5)(1, 0.0)

    def test_sqne_chain_single_operator(self):
        rho = sqne_chain_modulus([default_projection_sqne], lambda e: e, 1, 1)
        assert rho(0.4) == pytest.approx(0.2)

    def test_sqne_chain_shrinks_with_length(self):
        short = sqne_condition_modulus([default_projection_sqne], lambda e: e, 2)
        long = sqne_condition_modulus([default_projection_sqne], lambda e: e, 4)
        assert long(1, 0.5) < short(1, 0.5)

    def test_condition_modulus_rejects_bad_values(self):
        broken = ConditionModulus(lambda d, e: 0.0, 1)
        with pytest.raises(SpecValidationError):
            broken(1, 0.1)


if __name__ == "__main__":
    pytest.main(["-v", __file__])
