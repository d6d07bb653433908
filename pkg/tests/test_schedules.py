"""
Tests for step-size schedules and their moduli.
"""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enums import ModulusKind
from error_handler import NoModulusError, SpecValidationError
from schedules import (
    ModulusBundle,
    NoModulus,
    Schedule,
    ceil_root,
    iroot,
    lambda_at,
    modulus,
    require,
    to_fraction,
    verify_modulus,
    weighted_tail_sum,
)


class TestExactHelpers:
    def test_to_fraction_forms(self):
        assert to_fraction("1/2") == Fraction(1, 2)
        assert to_fraction(0.1) == Fraction(1, 10)
        assert to_fraction(3) == Fraction(3)
        with pytest.raises(SpecValidationError):
            to_fraction("half")
        with pytest.raises(SpecValidationError):
            to_fraction(float("inf"))

    @pytest.mark.parametrize("n,b,expected", [(0, 2, 0), (15, 2, 3), (16, 2, 4), (26, 3, 2), (27, 3, 3)])
    def test_iroot(self, n, b, expected):
        assert iroot(n, b) == expected

    def test_ceil_root(self):
        assert ceil_root(Fraction(17), 2) == 5
        assert ceil_root(Fraction(16), 2) == 4
        assert ceil_root(Fraction(9, 4), 2) == 2


class TestSchedule:
    def test_power_one_values(self, harmonic):
        assert lambda_at(harmonic, 5) == pytest.approx(1 / 6)
        assert lambda_at(harmonic, 0) == 1.0

    def test_power_half(self, sqrt_schedule):
        assert sqrt_schedule.lambda_at(3) == pytest.approx(0.5)

    def test_lambdas_vector_matches_pointwise(self, sqrt_schedule):
        vec = sqrt_schedule.lambdas(20)
        assert np.allclose(vec, [sqrt_schedule.lambda_at(n) for n in range(20)])

    def test_lambdas_nonincreasing_in_unit_interval(self):
        for s in (Schedule.power(1), Schedule.power("1/3"), Schedule.scaled_power("2/3", "1/2")):
            vec = s.lambdas(500)
            assert np.all(vec > 0) and np.all(vec <= 1)
            assert np.all(np.diff(vec) <= 0)

    @pytest.mark.parametrize("rho,scale", [(0, 1), ("3/2", 1), (1, 0), (1, 2)])
    def test_invalid_parameters(self, rho, scale):
        with pytest.raises(SpecValidationError):
            Schedule.scaled_power(rho, scale)

    def test_to_dict(self):
        assert Schedule.power("1/2", n_period=3).to_dict() == {
            "kind": "power", "rho": "1/2", "scale": "1", "n_period": 3,
        }


class TestModuli:
    def test_h_power_one(self, harmonic):
        assert modulus(harmonic, ModulusKind.H, 7) == 8

    def test_chi_power_one(self, harmonic):
        assert modulus(harmonic, ModulusKind.CHI, 10) == 10

    def test_chi_power_half(self, sqrt_schedule):
        # (i+1)^(-1/2) <= 1/(k+1) iff i >= (k+1)^2 - 1
        assert modulus(sqrt_schedule, ModulusKind.CHI, 4) == 24

    def test_phi4_power_one_period_two(self):
        assert modulus(Schedule.power(1, n_period=2), ModulusKind.PHI4, Fraction(1, 20)) == 39

    def test_phi2_missing_for_power_one(self, harmonic):
        result = modulus(harmonic, ModulusKind.PHI2, "1/2")
        assert isinstance(result, NoModulus)
        with pytest.raises(NoModulusError):
            require(result)

    def test_phi3_is_at_least_n(self, harmonic):
        bundle = ModulusBundle(harmonic, Fraction(1, 2))
        for n in (0, 5, 50):
            assert bundle.phi3("1/10", n) >= n
        assert bundle.phi3(2, 9) == 9

    def test_phi3_power_one_closed_form(self, harmonic):
        # (n+1) exp(ln(1/eps) / (1 - tau)) - 2 = 6 * 100 - 2, up to rounding at the ceiling
        assert ModulusBundle(harmonic, Fraction(1, 2)).phi3("1/10", 5) in (598, 599)

    def test_phi3_requires_tau(self, harmonic):
        with pytest.raises(SpecValidationError):
            ModulusBundle(harmonic).phi3("1/2", 0)

    def test_phi3_mono_dominates(self, sqrt_schedule):
        bundle = ModulusBundle(sqrt_schedule, Fraction(1, 4))
        values = [bundle.phi3_mono("1/5", n) for n in range(30)]
        assert values == sorted(values)

    def test_h_exact_alias(self, sqrt_schedule):
        bundle = ModulusBundle(sqrt_schedule)
        assert bundle.h_exact(3) == bundle.h(3) == 2

    def test_invalid_arguments(self, harmonic):
        bundle = ModulusBundle(harmonic, 0)
        with pytest.raises(SpecValidationError):
            bundle.phi4(0)
        with pytest.raises(SpecValidationError):
            bundle.phi3(-1, 0)
        with pytest.raises(SpecValidationError):
            ModulusBundle(harmonic, 1)


class TestVerifyModulus:
    CAP = 10_000

    @pytest.mark.parametrize("rho", ["1", "1/2", "2/3"])
    @pytest.mark.parametrize("kind,args", [
        (ModulusKind.H, ()),
        (ModulusKind.CHI, (10,)),
        (ModulusKind.PHI1, (3,)),
        (ModulusKind.PHI3, ("1/10", 5)),
        (ModulusKind.PHI3_MONO, ("1/10", 5)),
        (ModulusKind.PHI4, ("1/20",)),
    ])
    def test_builtin_moduli_verified(self, rho, kind, args):
        s = Schedule.power(rho, n_period=2)
        check = verify_modulus(s, kind, args, self.CAP, tau="1/2")
        assert check.verified, check

    @pytest.mark.parametrize("rho", ["1/2", "2/3"])
    def test_phi2_verified_below_one(self, rho):
        check = verify_modulus(Schedule.power(rho), ModulusKind.PHI2, ("1/2",), self.CAP)
        assert check.verified

    def test_false_phi2_claim_has_counterexample(self, harmonic):
        check = verify_modulus(harmonic, ModulusKind.PHI2, ("1/2",), self.CAP, claimed=100)
        assert not check.verified
        assert check.counterexample == 100

    def test_exact_h_verified(self, sqrt_schedule):
        check = verify_modulus(
            sqrt_schedule, ModulusKind.H, (), 1000,
            claimed=lambda n: math.ceil(1 / sqrt_schedule.lambda_at(n)),
        )
        assert check.verified

    def test_too_small_chi_rejected(self, harmonic):
        check = verify_modulus(harmonic, ModulusKind.CHI, (10,), 100, claimed=5)
        assert not check.verified
        assert check.counterexample == 5

    def test_cap_must_be_positive(self, harmonic):
        with pytest.raises(SpecValidationError):
            verify_modulus(harmonic, ModulusKind.CHI, (1,), 0)


class TestWeightedTailSum:
    @pytest.mark.property
    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=50), st.data())
    @settings(max_examples=1000, derandomize=True)
    def test_bounded_by_one(self, lambdas, data):
        m = data.draw(st.integers(0, len(lambdas) - 1))
        n = data.draw(st.integers(m, len(lambdas) - 1))
        assert weighted_tail_sum(lambdas, m, n) <= 1.0 + 1e-12

    def test_value(self):
        # 0.5 * 0.5 + 0.5
        assert weighted_tail_sum([0.5, 0.5], 0, 1) == pytest.approx(0.75)

    def test_engineered_violation(self):
        assert weighted_tail_sum([1.5], 0, 0) > 1.0

    def test_bad_range(self):
        with pytest.raises(SpecValidationError):
            weighted_tail_sum([0.5], 0, 1)


if __name__ == "__main__":
    pytest.main(["-v", __file__])
