"""
Tests for counterfunction strategies and the tower audits run against them.
"""
import json

import numpy as np
import pytest

from adversaries import (
    anticipating_adversary,
    branch_adversary,
    constant_adversary,
    random_adversary,
)
from enums import AdversaryStrategy, LadderReading
from error_handler import SpecValidationError
from hilbert_ops import ConstantMap, identity
from problem_spec import parse_problem
from verify import BUDGET, FAIL, PASS, adversary_suite


class TestConstantAdversary:
    def test_returns_witness(self):
        adv = constant_adversary(np.array([0.0, 1.0]), t=0.25, delta=0.5)
        assert adv.strategy is AdversaryStrategy.CONSTANT
        assert np.allclose(adv.cf.v(np.zeros(2), None), [0.0, 1.0])
        assert adv.cf.delta(np.ones(2), None) == 0.5
        assert adv.t == 0.25

    def test_delta_range(self):
        with pytest.raises(SpecValidationError):
            constant_adversary(np.zeros(2), delta=0.0)


class TestRandomAdversary:
    def test_deterministic_per_point(self):
        adv = random_adversary(np.zeros(2), 1.0, seed=7)
        u = np.array([0.3, -0.2])
        assert np.array_equal(adv.cf.v(u, None), adv.cf.v(u.copy(), None))
        assert adv.cf.delta(u, None) == adv.cf.delta(u.copy(), None)

    def test_ranges(self):
        adv = random_adversary(np.array([1.0, 1.0]), 0.5, seed=3, delta_floor=0.2)
        rng = np.random.default_rng(0)
        for _ in range(200):
            u = rng.normal(size=2)
            assert np.linalg.norm(adv.cf.v(u, None) - 1.0) <= 0.5 + 1e-12
            assert 0.2 <= adv.cf.delta(u, None) <= 1.0

    def test_seeds_differ(self):
        u = np.array([0.1, 0.1])
        a = random_adversary(np.zeros(2), 1.0, seed=1).cf.v(u, None)
        b = random_adversary(np.zeros(2), 1.0, seed=2).cf.v(u, None)
        assert not np.allclose(a, b)

    def test_radius_positive(self):
        with pytest.raises(SpecValidationError):
            random_adversary(np.zeros(2), 0.0, seed=1)


class TestBranchAdversary:
    def test_switches_to_challenge(self):
        base = constant_adversary(np.zeros(2))
        G = ConstantMap(np.array([1.0, 0.0]))
        closer = branch_adversary(base, G, np.array([1.0, 0.0]))
        farther = branch_adversary(base, G, np.array([-1.0, 0.0]))
        assert np.allclose(closer.cf.v(np.zeros(2), None), [1.0, 0.0])
        assert np.allclose(farther.cf.v(np.zeros(2), None), [0.0, 0.0])
        assert closer.strategy is AdversaryStrategy.BRANCH


class TestAnticipatingAdversary:
    def test_reads_resolvent_path(self, tower_instance):
        inst = tower_instance
        adv = anticipating_adversary(inst.T, inst.G, inst.schedule, inst.g, 1, inst.d, search=3)
        strategy = adv.details["strategy"]
        u = inst.u0
        phi = lambda v: 1.0  # noqa: E731
        v = adv.cf.v(u, phi)
        assert any(np.allclose(v, strategy.path[k]) for k in range(3))
        assert 0.0 < adv.cf.delta(u, phi) <= 1.0
        assert 0.0 < adv.t <= 1.0

    def test_no_qualifying_index_gives_zero(self, tower_instance):
        inst = tower_instance
        adv = anticipating_adversary(inst.T, inst.G, inst.schedule, inst.g, 1, inst.d, search=2)
        assert adv.details["strategy"].J(inst.u0, lambda v: 0.0) == 0

    def test_needs_contraction(self, tower_instance):
        inst = tower_instance
        with pytest.raises(SpecValidationError):
            anticipating_adversary(inst.T, identity(2), inst.schedule, inst.g, 1, inst.d)


@pytest.fixture(params=["0.25", "0"], ids=["tau=1/4", "tau=0"])
def tower_variant(request, problem_path):
    """toy_tower as shipped, or with G replaced by the constant map at its shift (tau = 0)."""
    raw = json.loads(problem_path("toy_tower").read_text())
    if request.param == "0":
        raw["contraction"] = {"kind": "constant", "point": raw["contraction"]["shift"]}
    instance = parse_problem(raw).build()
    assert instance.tau == float(request.param)
    return instance


TOWER_STRATEGIES = [AdversaryStrategy.CONSTANT, AdversaryStrategy.RANDOM, AdversaryStrategy.ANTICIPATING]


class TestAdversarySuite:
    @pytest.mark.slow
    @pytest.mark.parametrize("ladder", list(LadderReading))
    @pytest.mark.parametrize("eps", ["1/2", 1])
    @pytest.mark.parametrize("strategy", TOWER_STRATEGIES)
    def test_tower_survives_strategy(self, tower_variant, strategy, eps, ladder):
        # 5 seeded runs per cell; 2 tau x 2 eps x 3 strategies gives 60 runs per ladder
        reports = adversary_suite(tower_variant, strategy, eps, runs=5, seed=7, budget=50_000,
                                  reading=ladder)
        assert len(reports) == 5
        assert [r.seed for r in reports] == [7, 8, 9, 10, 11]
        statuses = [r.status for r in reports]
        assert FAIL not in statuses, [r.details for r in reports if r.status == FAIL]
        assert set(statuses) <= {PASS, BUDGET}
        if strategy is AdversaryStrategy.CONSTANT:
            assert statuses == [PASS] * 5
            assert all(r.details["guard"] for r in reports)

    def test_budget_is_reported_not_failed(self, tower_instance):
        reports = adversary_suite(tower_instance, AdversaryStrategy.CONSTANT, 1, seed=7, budget=1)
        assert [r.status for r in reports] == [BUDGET]
        assert reports[0].details["limit"] == 1


if __name__ == "__main__":
    pytest.main(["-v", __file__])
