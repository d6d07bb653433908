"""
Counterfunction strategies used to challenge the solution functionals.

Each builder returns an ``Adversary``: the pair (Delta, V) plus the weight t
the strategy prescribes for the caller's move toward V.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from config_manager import config
from custom_types import PhiFn, Point, SeqFn
from enums import AdversaryStrategy
from error_handler import SpecValidationError
from functional_engine import CounterfunctionPair, point_hash
from hilbert_ops import Operator, as_point
from iterates import ResolventPath
from schedules import ModulusBundle, Number, Schedule, to_fraction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Adversary:
    strategy: AdversaryStrategy
    cf: CounterfunctionPair
    t: float
    details: dict[str, Any] = field(default_factory=dict)


def constant_adversary(witness: Point, t: float = 0.5, delta: float = 1.0) -> Adversary:
    """V always returns the witness; Delta is constant."""
    w = as_point(witness)
    if not 0.0 < delta <= 1.0:
        raise SpecValidationError("constant Delta must lie in (0, 1]")
    cf = CounterfunctionPair(lambda u, phi: delta, lambda u, phi: w, name="constant")
    return Adversary(AdversaryStrategy.CONSTANT, cf, t, {"delta": delta})


def random_adversary(
    center: Point,
    radius: float,
    seed: int,
    t: float = 0.5,
    delta_floor: float = 0.05,
) -> Adversary:
    """Pseudo-random challenges seeded by the input point.

    V(u, phi) is uniform in the ball B(center, radius); Delta(u, phi) is uniform
    in [delta_floor, 1]. The same u always yields the same challenge.
    """
    c = as_point(center)
    if not radius > 0:
        raise SpecValidationError("random adversary needs a positive radius")

    def rng(u: Point) -> np.random.Generator:
        return np.random.default_rng([seed, int(point_hash(u), 16)])

    def v_fn(u: Point, phi: PhiFn) -> Point:
        r = rng(u)
        direction = r.standard_normal(c.size)
        direction /= max(float(np.linalg.norm(direction)), 1e-300)
        return c + radius * r.uniform() ** (1.0 / c.size) * direction

    def delta(u: Point, phi: PhiFn) -> float:
        r = rng(u)
        r.standard_normal(c.size)
        r.uniform()
        return float(r.uniform(delta_floor, 1.0))

    cf = CounterfunctionPair(delta, v_fn, name="random")
    return Adversary(AdversaryStrategy.RANDOM, cf, t, {"seed": seed, "radius": radius})


class AnticipatingStrategy:
    """J, V and Delta read off the resolvent path v_n.

    J(u, phi) is the least j with ||T v_k - v_k|| < phi(v_k) for k = g~_{u,eps}(j),
    or 0 when no j up to the search cap qualifies; g~(n) = max(n, g(n)) and
    g~_{u,eps}(j) is g~(j) if ||v_{g~(j)} - u|| > eps/2, else j.
    """

    def __init__(
        self,
        T: Operator,
        G: Operator,
        schedule: Schedule,
        g: SeqFn,
        eps: Number,
        d: int,
        search: int | None = None,
    ) -> None:
        if not G.claimed.is_contraction:
            raise SpecValidationError("G must be a strict contraction")
        self.T = T
        self.path = ResolventPath(T, G, schedule)
        self.g = g
        self.eps = float(to_fraction(eps))
        self.d = d
        self.tau = G.claimed.lipschitz
        self.bundle = ModulusBundle(schedule)
        self.search = search if search is not None else int(
            config.get_setting("budgets", "anticipatingSearch", 256)
        )
        self._j: dict[tuple[bytes, int], tuple[int, PhiFn]] = {}

    def g_tilde(self, n: int) -> int:
        return max(n, int(self.g(n)))

    def index(self, u: Point, j: int) -> int:
        gj = self.g_tilde(j)
        if float(np.linalg.norm(self.path[gj] - u)) > self.eps / 2.0:
            return gj
        return j

    def J(self, u: Point, phi: PhiFn) -> int:
        key = (u.tobytes(), id(phi))
        if key in self._j:
            return self._j[key][0]
        found = 0
        for j in range(self.search + 1):
            v = self.path[self.index(u, j)]
            if float(np.linalg.norm(self.T(v) - v)) < phi(v):
                found = j
                break
        self._j[key] = (found, phi)
        return found

    def V(self, u: Point, phi: PhiFn) -> Point:
        return self.path[self.index(u, self.J(u, phi))]

    def Delta(self, u: Point, phi: PhiFn) -> float:
        k = self.index(u, self.J(u, phi))
        value = (self.eps / 2.0) ** 2 / (6.0 * self.d * (1.0 - self.tau) * self.bundle.h(k))
        return min(1.0, value)

    @property
    def t(self) -> float:
        return min(1.0, (self.eps / 2.0) ** 2 / (6.0 * (1.0 - self.tau) ** 2 * self.d ** 2))


def anticipating_adversary(
    T: Operator,
    G: Operator,
    schedule: Schedule,
    g: SeqFn,
    eps: Number,
    d: int,
    search: int | None = None,
) -> Adversary:
    strategy = AnticipatingStrategy(T, G, schedule, g, eps, d, search)
    cf = CounterfunctionPair(strategy.Delta, strategy.V, name="anticipating")
    return Adversary(
        AdversaryStrategy.ANTICIPATING,
        cf,
        strategy.t,
        {"search": strategy.search, "eps": strategy.eps, "strategy": strategy},
    )


def branch_adversary(base: Adversary, G: Operator, challenge: Point) -> Adversary:
    """V'(u, phi) = V(u, phi) if ||Gu - V^t|| <= ||Gu - (1 - t) u - t x||, else x."""
    x = as_point(challenge)
    t = base.t
    inner = base.cf

    def v_fn(u: Point, phi: PhiFn) -> Point:
        v = as_point(inner.v(u, phi))
        gu = G(u)
        anchor = gu - (1.0 - t) * u
        if float(np.linalg.norm(anchor - t * v)) <= float(np.linalg.norm(anchor - t * x)):
            return v
        return x

    cf = CounterfunctionPair(inner.delta, v_fn, name=f"branch[{inner.name}]")
    return Adversary(AdversaryStrategy.BRANCH, cf, t, {**base.details, "challenge": x.tolist()})
