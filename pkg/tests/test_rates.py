"""
Tests for majorant towers and the metastability bounds.
"""
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enums import CertificateStatus, CertifyMode, OmegaReading, TowerReading
from error_handler import CheckFailedError, NoModulusError, SpecValidationError
from rates import (
    Certificate,
    Closed,
    Iterated,
    ModuliView,
    Monotonized,
    RateBudget,
    RateValue,
    Tabulated,
    Tilde,
    asy_rate,
    chain_domination,
    chi_hat,
    constant_majorant,
    family_start,
    identity_majorant,
    iterate_value,
    k_levels,
    k_tower,
    omega_d,
    phi_star,
    phi_tilde_star,
    power_majorant,
    psi_star,
    tower_shape,
    xi_corollary,
    xi_family,
    xi_full,
    xi_single,
)
from schedules import ModulusBundle

FORCED = {"n_eps_tilde": 2, "i0": 0}


class TestMajorants:
    def test_tilde_of_identity(self):
        assert Tilde(identity_majorant(), 1)(3) == 144
        assert Tilde(identity_majorant(), 2)(1) == 32

    def test_tilde_monomial(self):
        assert Tilde(identity_majorant(), 1).monomial() == (16, 2)
        assert Tilde(constant_majorant(3), 1).monomial() == (16, 2)
        assert Tilde(constant_majorant(100), 1).monomial() is None

    def test_monotonized_table(self):
        m = Monotonized(Tabulated([3, 1, 2]))
        assert [m(n) for n in (1, 2, 3, 9)] == [3, 3, 3, 3]

    def test_table_extends_by_last_entry(self):
        assert Tabulated([1, 5])(10) == 5

    def test_table_rejects_zero(self):
        with pytest.raises(SpecValidationError):
            Tabulated([1, 0])

    def test_iterated_monomial(self):
        assert Iterated(power_majorant(2, 1), 3).monomial() == (8, 1)
        f = power_majorant(2, 2)
        it = Iterated(f, 2)
        assert it.monomial() == (8, 4)
        assert it(2) == 8 * 2 ** 4 == f(f(2))

    def test_iterate_value_paths_agree(self):
        budget = RateBudget()
        f = power_majorant(3, 1)
        assert iterate_value(f, 5, 2, budget) == iterate_value(f, 5, 2, budget, memoized=True) == 486

    def test_closed_clamps_to_one(self):
        assert Closed(lambda n: 0, "0")(5) == 1

    @pytest.mark.property
    @given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 50))
    @settings(max_examples=200, derandomize=True)
    def test_tilde_dominates_and_is_monotone(self, c, e, n):
        t = Tilde(power_majorant(c, e), 1)
        assert t(n) >= n
        assert t(n + 1) >= t(n)


class TestFunctionals:
    def test_psi_star(self):
        f = identity_majorant()
        assert [psi_star(f, 1, i) for i in (1, 2, 3)] == [1, 16, 4096]

    def test_phi_star_is_running_max(self):
        assert phi_star(identity_majorant(), 1, 3) == 4096

    def test_phi_tilde_star(self):
        f = identity_majorant()
        assert phi_tilde_star(f, 1, 2) == 4096
        assert phi_tilde_star(f, 1, 2, memoized=True) == 4096

    def test_psi_star_index(self):
        with pytest.raises(SpecValidationError):
            psi_star(identity_majorant(), 1, 0)


class TestTower:
    def test_k_tower_literal(self):
        value = k_tower(identity_majorant(), 1, overrides=FORCED)
        assert value.value == 2 ** 60

    def test_k_tower_memoized(self):
        value = k_tower(identity_majorant(), 1, overrides=FORCED, memoized=True)
        assert value.value == 2 ** 60
        assert value.quantities == {"n_eps_tilde": 2, "i0": 0}

    @pytest.mark.parametrize("memoized", [False, True])
    @pytest.mark.parametrize("reading,expected", [
        (TowerReading.PROOF, [2 ** 252, 2 ** 4092]),
        (TowerReading.PRINTED, [2 ** 60, 2 ** 1020]),
    ])
    def test_two_level_tower_per_reading(self, reading, expected, memoized):
        # f~(n) = 16 n^2 and tilde(f~^(m)) = f~^(m+1); proof builds k_0 on f~^(2), printed on f~^(1)
        shape = tower_shape(1, None, None, {"n_eps_tilde": 2, "i0": 1})
        assert k_levels(identity_majorant(), 1, shape, memoized=memoized, reading=reading) == expected
        value = k_tower(identity_majorant(), 1, overrides={"n_eps_tilde": 2, "i0": 1},
                        memoized=memoized, reading=reading)
        assert value.value == expected[-1]

    def test_readings_agree_on_one_level(self):
        values = {k_tower(identity_majorant(), 1, overrides=FORCED, reading=r).value for r in TowerReading}
        assert values == {2 ** 60}

    def test_tower_reading_reaches_xi_single(self, harmonic, mocker):
        levels = mocker.patch("rates.k_levels", return_value=[3])
        moduli = ModulusBundle(harmonic, Fraction(1, 2))
        value = xi_single(1, lambda n: n + 1, moduli, 1, overrides={"n_eps_tilde": 2, "i0": 1},
                          tower_reading="printed")
        assert value.quantities["k"] == 3
        assert levels.call_args.args[-1] == "printed"

    def test_bit_budget_gives_symbolic_value(self):
        for memoized in (False, True):
            value = k_tower(identity_majorant(), 1, overrides=FORCED, memoized=memoized,
                            budget=RateBudget(bits=40))
            assert not value.is_finite
            assert value.status == "budget_exceeded"
            assert "k_0" in value.describe()

    def test_shape_needs_parameters(self):
        with pytest.raises(SpecValidationError):
            tower_shape(1, None, None, {"i0": 0})
        with pytest.raises(SpecValidationError):
            tower_shape(1, None, None, {"n_eps_tilde": 0, "i0": 0})

    @pytest.mark.parametrize("k", [1, 3, 10])
    def test_recursive_chain_dominated_by_closed_form(self, k):
        rows = chain_domination(identity_majorant(), 1, 2, 1, k)
        assert [i for i, _, _ in rows] == [1, 0]
        for _, recursive, closed in rows:
            assert recursive.value <= closed.value

    def test_chain_top_levels_agree(self):
        rows = chain_domination(identity_majorant(), 1, 2, 1, 1)
        assert all(r.value == c.value for _, r, c in rows)


class TestSingleBounds:
    def test_xi_single_small_tower(self, harmonic):
        # f(n) = 12 (n + 2); k = max(f^M(16 * 16), 16) evaluated through two tilde levels
        moduli = ModulusBundle(harmonic, Fraction(1, 2))
        value = xi_single(1, lambda n: n + 1, moduli, 1, overrides={"n_eps_tilde": 1, "i0": 0})
        assert value.value == 49176
        assert value.quantities["k"] == 49176
        assert value.quantities["eps_d"] == Fraction(1, 32)

    def test_forced_k(self, sqrt_schedule):
        moduli = ModulusBundle(sqrt_schedule, Fraction(1, 2))
        value = xi_single("1/2", lambda n: n + 1, moduli, 1, overrides={"k": 3})
        assert value.value == 15

    def test_corollary_with_forced_k(self, harmonic):
        moduli = ModulusBundle(harmonic, Fraction(1, 2))
        assert xi_corollary("1/2", lambda n: 1, moduli, 2, overrides={"k": 4}).value == 8

    def test_moduli_view_override(self, harmonic):
        view = ModuliView(ModulusBundle(harmonic, Fraction(1, 2)), chi=lambda k: 2 * k)
        assert view.chi(5) == 10
        assert view.h(7) == 8
        assert view.tau == Fraction(1, 2)

    def test_eps_range(self, harmonic_bundle):
        with pytest.raises(SpecValidationError):
            xi_single(2, lambda n: n, harmonic_bundle, 1, overrides={"k": 1})

    def test_tau_required(self, harmonic):
        with pytest.raises(SpecValidationError):
            xi_single("1/2", lambda n: n, ModulusBundle(harmonic), 1, overrides={"k": 1})


class TestFullBounds:
    def test_harmonic_has_no_full_bound(self, harmonic):
        with pytest.raises(NoModulusError):
            xi_full("1/2", lambda n: n + 1, ModulusBundle(harmonic, Fraction(1, 2)), 1, overrides={"k": 3})

    def test_full_bound_adds_shift(self, sqrt_schedule):
        moduli = ModulusBundle(sqrt_schedule, Fraction(1, 2))
        fb = xi_full("1/2", lambda n: n + 1, moduli, 1, mode=CertifyMode.FULL, overrides={"k": 3})
        assert fb.c > 0
        assert fb.bound.value == 15 + fb.c
        assert fb.delta is None and fb.eps_prime is None

    def test_quant_bound_reports_vip_accuracy(self, sqrt_schedule):
        moduli = ModulusBundle(sqrt_schedule, Fraction(1, 2))
        fb = xi_full("1/2", lambda n: n + 1, moduli, 1, mode=CertifyMode.QUANT, overrides={"k": 3})
        assert fb.delta == Fraction(1, 10)
        assert fb.eps_prime.value == 3
        assert fb.to_dict()["eps_prime"] == "1/3"

    def test_single_mode_rejected(self, sqrt_schedule):
        with pytest.raises(SpecValidationError):
            xi_full("1/2", lambda n: n, ModulusBundle(sqrt_schedule, 0), 1, mode=CertifyMode.SINGLE)


class TestFamilyBounds:
    def test_chi_hat_finite(self, family_instance):
        inst = family_instance
        value = chi_hat(Fraction(1, 2), inst.bundle, inst.d, inst.n_ops)
        assert isinstance(value, int) and value > 0

    def test_asy_rate_with_condition_modulus(self, family_instance):
        inst = family_instance
        plain = asy_rate("1/2", inst.bundle, inst.d, inst.n_ops)
        conditioned = asy_rate("1/2", inst.bundle, inst.d, inst.n_ops, inst.condition)
        assert conditioned >= plain

    def test_asy_rate_arguments(self, harmonic_bundle):
        with pytest.raises(SpecValidationError):
            asy_rate(0, harmonic_bundle, 1, 2)
        with pytest.raises(SpecValidationError):
            asy_rate("1/2", harmonic_bundle, 1, 0)

    def test_operator_count_must_match_schedule_period(self, family_instance):
        inst = family_instance
        assert inst.schedule.n_period == inst.n_ops == 2
        with pytest.raises(SpecValidationError, match="2 operator"):
            asy_rate("1/2", inst.bundle, inst.d, 3)
        with pytest.raises(SpecValidationError, match="N = 1"):
            chi_hat(Fraction(1, 2), inst.bundle, inst.d, 1)

    def test_family_start(self, harmonic):
        bundle = ModulusBundle(harmonic, Fraction(1, 2))
        assert family_start(Fraction(1, 2), bundle.chi, 1, Fraction(1, 2)) == 768

    def test_xi_family_forced_k(self, family_instance):
        inst = family_instance
        value = xi_family("1/2", inst.g, inst.bundle, inst.condition, inst.d, inst.n_ops,
                          overrides={"k": 2})
        assert value.is_finite
        assert value.value >= value.quantities["n0"] == 768

    def test_omega_guard(self, harmonic_bundle):
        guarded = omega_d(2, lambda n: 0, 5, harmonic_bundle, 1)
        assert guarded.guarded
        assert guarded.value == Fraction(2, 9)
        printed = omega_d(2, lambda n: 0, 5, harmonic_bundle, 1, OmegaReading.PRINTED)
        assert printed.guarded

    def test_omega_regular(self, harmonic):
        bundle = ModulusBundle(harmonic, Fraction(1, 2))
        value = omega_d("1/2", lambda n: n + 1, 5, bundle, 1)
        assert not value.guarded
        assert 0 < value.value < Fraction(1, 72)


class TestCertificate:
    def make(self, bound):
        return Certificate("toy", CertifyMode.SINGLE, Fraction(1, 2), "n+1", bound)

    def test_witness_within_bound(self):
        cert = self.make(RateValue.exact(10))
        assert cert.status is CertificateStatus.BOUND_EVALUATED
        cert.attach_witness(3)
        assert cert.status is CertificateStatus.VERIFIED_EMPIRICALLY

    def test_witness_above_bound(self):
        with pytest.raises(CheckFailedError):
            self.make(RateValue.exact(10)).attach_witness(11)

    def test_symbolic_bound(self):
        cert = self.make(RateValue.budget_exceeded("k_3[f]"))
        cert.attach_witness(5)
        assert cert.status is CertificateStatus.BOUND_SYMBOLIC

    def test_json(self):
        payload = json.loads(self.make(RateValue.exact(2 ** 20000, "big")).to_json())
        assert payload["epsilon"] == "1/2"
        assert payload["bound"]["bits"] == 20001
        assert payload["bound"]["value"].startswith("0x")
        assert payload["status"] == "bound_evaluated"

    def test_missing_value(self):
        value = RateValue.missing("no phi2")
        assert value.status == "no_modulus"
        assert value.to_dict()["reason"] == "no phi2"


if __name__ == "__main__":
    pytest.main(["-v", __file__])
