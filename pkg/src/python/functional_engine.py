"""
Solution functionals for the epsilon-projection problem and the
epsilon-Picard counterfunction tower.

A counterfunction pair (Delta, V) challenges a candidate (u, phi): the
candidate wins when ||u - Tu|| < Delta(u, phi) and, whenever V(u, phi) is
phi-close to fix(T), u is epsilon-optimal against the point reached by moving
a fraction t toward V(u, phi).

The psi ladder:
    psi_1 = 1
    psi_l(v) = min(Delta(v, psi_{l-1}^v), psi_{l-1}^v(V(v, psi_{l-1}^v)))
    psi^u(v) = psi((1 - t) u + t v)^2 / (16 d)

Candidates start at the fixed-set witness u_1 and move by u <- (1 - t) u +
t V(u, psi^u). The literal walk checks u_i against psi^{u_i}_{n_eps - i} and
steps with psi_{n_eps - i - 1}, returning the least i <= n_eps that wins. The
doubling walk restarts at depths 1, 2, 4, ... (capped by budgets.maxPsiDepth)
and checks and steps with psi_{depth - i + 1}.

psi values lie in (0, 1], so a zero residual beats any of them without
evaluating the ladder.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from config_manager import config
from custom_types import DeltaFn, PhiFn, Point, TranscriptEntry, VFn
from enums import LadderReading
from error_handler import BudgetExceededError, ProjectionSearchError, SpecValidationError
from hilbert_ops import Operator, as_point
from schedules import Number, to_fraction

logger = logging.getLogger(__name__)

Conclusion = Callable[[Point, PhiFn], bool]


def point_hash(x: Point) -> str:
    """Short stable digest of a point's float64 bytes."""
    return hashlib.sha1(np.ascontiguousarray(x, dtype=np.float64).tobytes()).hexdigest()[:12]


def _sq(x: Point) -> float:
    return float(np.dot(x, x))


def _mix(u: Point, v: Point, t: float) -> Point:
    return (1.0 - t) * u + t * v


@dataclass
class EvaluationBudget:
    """Shared counter of counterfunction evaluations."""
    limit: int | None = None
    used: int = 0

    def __post_init__(self) -> None:
        if self.limit is None:
            self.limit = int(config.get_setting("budgets", "evaluations", 1_000_000))
        if self.limit < 1:
            raise SpecValidationError("evaluation budget must be >= 1")

    def charge(self, partial: Any = None) -> None:
        self.used += 1
        assert self.limit is not None
        if self.used > self.limit:
            raise BudgetExceededError(self.limit, partial)

    @property
    def remaining(self) -> int:
        assert self.limit is not None
        return max(0, self.limit - self.used)


@dataclass
class Transcript:
    """Log of counterfunction calls: level, input point hash, kind, output."""
    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, level: int, point: Point, kind: str, output: Any) -> None:
        if isinstance(output, np.ndarray):
            output = [float(c) for c in output]
        self.entries.append(
            TranscriptEntry(level=level, point=point_hash(point), kind=kind, output=output)
        )

    def __len__(self) -> int:
        return len(self.entries)

    def dump(self) -> list[dict[str, Any]]:
        return [dict(e) for e in self.entries]

    def write(self, path: str | Path) -> Path:
        """One JSON object per line."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for entry in self.entries:
                f.write(json.dumps(entry, sort_keys=True) + "\n")
        logger.info("wrote %d transcript entries to %s", len(self.entries), path)
        return path


@dataclass(frozen=True)
class CounterfunctionPair:
    """(Delta, V): Delta maps into (0, 1], V into the confinement ball."""
    delta: DeltaFn
    v: VFn
    name: str = "cf"


class _Instrumented:
    """Budget-charging, validating and memoizing view of a counterfunction pair."""

    def __init__(
        self,
        cf: CounterfunctionPair,
        level: int,
        budget: EvaluationBudget,
        transcript: Transcript | None,
        dim: int,
    ) -> None:
        self.cf = cf
        self.level = level
        self.budget = budget
        self.transcript = transcript
        self.dim = dim
        # phi is kept in the value so its id stays unique while cached
        self._delta: dict[tuple[bytes, int], tuple[float, PhiFn]] = {}
        self._v: dict[tuple[bytes, int], tuple[Point, PhiFn]] = {}

    def delta(self, u: Point, phi: PhiFn) -> float:
        key = (u.tobytes(), id(phi))
        if key in self._delta:
            return self._delta[key][0]
        self.budget.charge(partial={"level": self.level, "counterfunction": self.cf.name})
        value = float(self.cf.delta(u, phi))
        if not 0.0 < value <= 1.0:
            raise SpecValidationError(
                f"Delta of {self.cf.name} returned {value}, outside (0, 1]"
            )
        self._delta[key] = (value, phi)
        if self.transcript is not None:
            self.transcript.record(self.level, u, f"{self.cf.name}.delta", value)
        return value

    def v(self, u: Point, phi: PhiFn) -> Point:
        key = (u.tobytes(), id(phi))
        if key in self._v:
            return self._v[key][0]
        self.budget.charge(partial={"level": self.level, "counterfunction": self.cf.name})
        value = as_point(self.cf.v(u, phi), self.dim)
        self._v[key] = (value, phi)
        if self.transcript is not None:
            self.transcript.record(self.level, u, f"{self.cf.name}.V", value)
        return value


class _Shifted:
    """psi^u_level(v) = psi_level((1 - t) u + t v)^2 / (16 d)."""

    __slots__ = ("ladder", "level", "u")

    def __init__(self, ladder: PsiLadder, level: int, u: Point) -> None:
        self.ladder = ladder
        self.level = level
        self.u = u

    def __call__(self, v: Point) -> float:
        x = _mix(self.u, np.asarray(v, dtype=np.float64), self.ladder.t)
        return self.ladder.psi(self.level, x) ** 2 / (16.0 * self.ladder.d)

    def __repr__(self) -> str:
        return f"psi^u[{self.level}]"


class PsiLadder:
    """Memoized psi_l and shifted psi^u_l for one counterfunction pair."""

    def __init__(self, delta: DeltaFn, v_fn: VFn, t: float, d: int) -> None:
        self.delta = delta
        self.v_fn = v_fn
        self.t = t
        self.d = d
        self._psi: dict[tuple[int, bytes], float] = {}
        self._shifted: dict[tuple[int, bytes], _Shifted] = {}

    def shifted(self, level: int, u: Point) -> _Shifted:
        key = (level, u.tobytes())
        phi = self._shifted.get(key)
        if phi is None:
            phi = _Shifted(self, level, u.copy())
            self._shifted[key] = phi
        return phi

    def psi(self, level: int, x: Point) -> float:
        if level <= 1:
            return 1.0
        key = (level, x.tobytes())
        if key not in self._psi:
            phi = self.shifted(level - 1, x)
            value = min(self.delta(x, phi), phi(self.v_fn(x, phi)))
            self._psi[key] = value
        return self._psi[key]


@dataclass
class EpsProjectionResult:
    """Accepted candidate of an epsilon-projection search.

    Attributes:
        u: the candidate point
        phi: its challenge function psi^u at the accepted level
        index_used: position of u in the candidate sequence (1-based)
        depth: ladder length of the walk that accepted it (n_eps for the literal walk)
        transcript: counterfunction calls, when recording
    """
    u: Point
    phi: PhiFn
    index_used: int
    depth: int
    transcript: Transcript | None = None


def _n_eps(d: int, eps: Fraction) -> int:
    return math.ceil(Fraction(d * d) / eps)


def _depths(n_eps: int, max_depth: int) -> list[int]:
    top = min(n_eps, max_depth)
    out = []
    depth = 1
    while depth < top:
        out.append(depth)
        depth *= 2
    out.append(top)
    return out


def _validate(t: float, eps: Fraction, d: int) -> None:
    if not 0.0 <= t <= 1.0:
        raise SpecValidationError(f"t must lie in [0, 1], got {t}")
    if eps <= 0:
        raise SpecValidationError(f"eps must be positive, got {eps}")
    if d < 1:
        raise SpecValidationError(f"d must be >= 1, got {d}")


def _checked_witness(T: Operator, witness: Any) -> Point:
    w = as_point(witness, T.dim)
    residual = float(np.linalg.norm(T(w) - w))
    if residual > config.slack("witnessTolerance"):
        raise SpecValidationError(f"witness is not a fixed point of T (residual {residual:.3g})")
    return w


def _guarded(
    v0: Point,
    T: Operator,
    t: float,
    eps: float,
    v_fn: VFn,
) -> Conclusion:
    """||TV - V|| < phi(V)  implies  ||v0 - u||^2 <= ||v0 - V^t||^2 + eps."""
    slack = config.slack("predicateSlack")

    def holds(u: Point, phi: PhiFn) -> bool:
        v = v_fn(u, phi)
        gap = float(np.linalg.norm(T(v) - v))
        if gap > 0.0 and not gap < phi(v):
            return True
        return _sq(v0 - u) <= _sq(v0 - _mix(u, v, t)) + eps + slack

    return holds


def _ladder_reading(reading: LadderReading | str | None) -> LadderReading:
    if reading is None:
        reading = config.get_setting("iteration", "ladderReading", LadderReading.LITERAL.value)
    return LadderReading(reading)


def _wins(u: Point, phi: PhiFn, T: Operator, delta: DeltaFn, conclusion: Conclusion) -> bool:
    residual = float(np.linalg.norm(u - T(u)))
    if residual > 0.0 and not residual < delta(u, phi):
        return False
    return conclusion(u, phi)


def _walk_literal(
    T: Operator,
    t: float,
    delta: DeltaFn,
    v_fn: VFn,
    witness: Point,
    n_eps: int,
    ladder: PsiLadder,
    conclusion: Conclusion,
    progress: list[int],
) -> EpsProjectionResult | None:
    u = witness
    for i in range(1, n_eps + 1):
        phi = ladder.shifted(n_eps - i, u)
        progress[0] += 1
        if _wins(u, phi, T, delta, conclusion):
            return EpsProjectionResult(u, phi, i, n_eps)
        if i < n_eps:
            u = _mix(u, v_fn(u, ladder.shifted(n_eps - i - 1, u)), t)
    return None


def _walk_doubling(
    T: Operator,
    t: float,
    delta: DeltaFn,
    v_fn: VFn,
    witness: Point,
    n_eps: int,
    ladder: PsiLadder,
    conclusion: Conclusion,
    progress: list[int],
) -> EpsProjectionResult | None:
    max_depth = int(config.get_setting("budgets", "maxPsiDepth", 128))
    for depth in _depths(n_eps, max_depth):
        u = witness
        for i in range(1, depth + 1):
            phi = ladder.shifted(depth - i + 1, u)
            progress[0] += 1
            if _wins(u, phi, T, delta, conclusion):
                return EpsProjectionResult(u, phi, i, depth)
            u = _mix(u, v_fn(u, phi), t)
    if n_eps > max_depth:
        raise BudgetExceededError(max_depth, partial={"n_eps": n_eps, "examined": progress[0]})
    return None


def _search(
    T: Operator,
    t: float,
    eps: Fraction,
    delta: DeltaFn,
    v_fn: VFn,
    witness: Point,
    d: int,
    conclusion: Conclusion,
    reading: LadderReading,
) -> EpsProjectionResult:
    n_eps = _n_eps(d, eps)
    ladder = PsiLadder(delta, v_fn, t, d)
    walk = _walk_literal if reading is LadderReading.LITERAL else _walk_doubling
    progress = [0]
    try:
        result = walk(T, t, delta, v_fn, witness, n_eps, ladder, conclusion, progress)
    except RecursionError as e:
        raise BudgetExceededError(
            n_eps, partial={"reading": str(reading), "examined": progress[0]}
        ) from e
    if result is not None:
        logger.debug("eps-projection (%s) accepted candidate %d of n_eps=%d",
                     reading, result.index_used, n_eps)
        return result
    raise ProjectionSearchError(
        f"no candidate up to n_eps={n_eps} satisfied the projection claim; "
        "check the witness and the counterfunction ranges",
        n_eps,
        progress[0],
    )


def eps_projection(
    v0: Point,
    T: Operator,
    t: float,
    eps: Number,
    cf: CounterfunctionPair,
    witness: Point,
    d: int,
    *,
    budget: EvaluationBudget | None = None,
    transcript: Transcript | None = None,
    conclusion: Conclusion | None = None,
    level: int = 0,
    reading: LadderReading | str | None = None,
) -> EpsProjectionResult:
    """Find (u, phi) with ||u - Tu|| < Delta(u, phi) that wins against V.

    Args:
        v0: point being projected
        T: nonexpansive operator whose fixed set is the target
        t: weight of the move toward V
        eps: accuracy; n_eps = ceil(d^2 / eps) bounds the ladder depth
        cf: the challenging pair (Delta, V)
        witness: a fixed point of T, the first candidate
        d: confinement bound
        budget: shared evaluation counter
        transcript: records every counterfunction call
        conclusion: replaces the default guarded implication
        level: tower level tag for the transcript
        reading: ladder walk; iteration.ladderReading when None

    Raises:
        SpecValidationError: bad ranges or a witness that is not fixed
        ProjectionSearchError: no candidate up to n_eps won
        BudgetExceededError: evaluation budget, recursion depth or the doubling depth cap reached
    """
    e = to_fraction(eps)
    _validate(t, e, d)
    x0 = as_point(v0, T.dim)
    w = _checked_witness(T, witness)
    budget = budget if budget is not None else EvaluationBudget()
    inst = _Instrumented(cf, level, budget, transcript, T.dim)
    check = conclusion if conclusion is not None else _guarded(x0, T, t, float(e), inst.v)
    result = _search(T, t, e, inst.delta, inst.v, w, d, check, _ladder_reading(reading))
    result.transcript = transcript
    return result


def eps_projection_pair(
    v0: Point,
    T: Operator,
    t1: float,
    t2: float,
    eps: Number,
    cf1: CounterfunctionPair,
    cf2: CounterfunctionPair,
    witness: Point,
    d: int,
    *,
    budget: EvaluationBudget | None = None,
    transcript: Transcript | None = None,
    level: int = 0,
    reading: LadderReading | str | None = None,
) -> EpsProjectionResult:
    """One candidate that wins against both pairs at once.

    Delta is the pointwise minimum. V picks V_1 when ||v0 - V_1^{t1}|| <=
    ||v0 - V_2^{t2}||, else V_2, and is rescaled so that the move with weight
    max(t1, t2) lands exactly on the chosen V_i^{t_i}.
    """
    e = to_fraction(eps)
    _validate(t1, e, d)
    _validate(t2, e, d)
    x0 = as_point(v0, T.dim)
    w = _checked_witness(T, witness)
    budget = budget if budget is not None else EvaluationBudget()
    first = _Instrumented(cf1, level, budget, transcript, T.dim)
    second = _Instrumented(cf2, level, budget, transcript, T.dim)
    t_ref = max(t1, t2)

    def delta(u: Point, phi: PhiFn) -> float:
        return min(first.delta(u, phi), second.delta(u, phi))

    def v_fn(u: Point, phi: PhiFn) -> Point:
        a = first.v(u, phi)
        b = second.v(u, phi)
        if math.sqrt(_sq(x0 - _mix(u, a, t1))) <= math.sqrt(_sq(x0 - _mix(u, b, t2))):
            chosen, t_i = a, t1
        else:
            chosen, t_i = b, t2
        if t_ref == 0.0:
            return chosen
        return u + (t_i / t_ref) * (chosen - u)

    both = (
        _guarded(x0, T, t1, float(e), first.v),
        _guarded(x0, T, t2, float(e), second.v),
    )

    def conclusion(u: Point, phi: PhiFn) -> bool:
        return all(check(u, phi) for check in both)

    result = _search(T, t_ref, e, delta, v_fn, w, d, conclusion, _ladder_reading(reading))
    result.transcript = transcript
    return result


# ----------------------------------------------------------------------------
# epsilon-Picard tower
# ----------------------------------------------------------------------------

def a_predicate(eps_tilde: Number, u: Point, v: Point, p: Point, d: int) -> bool:
    """||u - p||^2 <= eps~^4/(8d^2) + ||(1 - w) u + w v - p||^2 with w = eps~^2/(6d^2)."""
    et = float(to_fraction(eps_tilde))
    if not et > 0:
        raise SpecValidationError("eps_tilde must be positive")
    if d < 1:
        raise SpecValidationError("d must be >= 1")
    w = et * et / (6.0 * d * d)
    lhs = _sq(np.asarray(u) - p)
    rhs = et ** 4 / (8.0 * d * d) + _sq(_mix(np.asarray(u), np.asarray(v), w) - p)
    return lhs <= rhs + config.slack("predicateSlack")


@dataclass(frozen=True)
class TowerParameters:
    """Exact constants of the tower.

    Attributes:
        eps_tilde: (1 - tau)^2 eps / (6 + 8d)
        n_eps_tilde: ceil(8 d^4 / eps_tilde^4), the ladder bound at the inner accuracy
        i0: top level; 1 when tau = 0
        weight: eps_tilde^2 / (6 d^2), the move weight of inner levels
        accuracy: eps_tilde^4 / (8 d^2), the inner projection accuracy
    """
    eps: Fraction
    tau: Fraction
    d: int
    eps_tilde: Fraction
    n_eps_tilde: int
    i0: int
    weight: Fraction
    accuracy: Fraction

    def to_dict(self) -> dict[str, Any]:
        return {
            "eps": str(self.eps),
            "tau": str(self.tau),
            "d": self.d,
            "eps_tilde": str(self.eps_tilde),
            "n_eps_tilde": self.n_eps_tilde,
            "i0": self.i0,
            "weight": str(self.weight),
            "accuracy": str(self.accuracy),
        }


def top_level(tau: Fraction, threshold: Fraction) -> int:
    """ceil(log_tau(threshold) - 1), clamped to >= 1; 1 for tau = 0."""
    if tau == 0:
        return 1
    cap = int(config.get_setting("budgets", "applications", 1_000_000))
    power = Fraction(1)
    k = 0
    while power > threshold:
        power *= tau
        k += 1
        if k > cap:
            raise BudgetExceededError(cap, partial={"i0": f"log_{tau}({threshold}) - 1"})
    return max(1, k - 1)


def tower_parameters(eps: Number, tau: Number, d: int) -> TowerParameters:
    """eps~, n_eps~ and i0 for accuracy eps, contraction factor tau and bound d."""
    e = to_fraction(eps)
    ta = to_fraction(tau)
    if not 0 < e <= 1:
        raise SpecValidationError(f"eps must lie in (0, 1], got {e}")
    if not 0 <= ta < 1:
        raise SpecValidationError(f"tau must lie in [0, 1), got {ta}")
    if d < 1:
        raise SpecValidationError(f"d must be >= 1, got {d}")
    eps_tilde = (1 - ta) ** 2 * e / (6 + 8 * d)
    weight = eps_tilde ** 2 / (6 * d * d)
    accuracy = eps_tilde ** 4 / (8 * d * d)
    return TowerParameters(
        eps=e,
        tau=ta,
        d=d,
        eps_tilde=eps_tilde,
        n_eps_tilde=math.ceil(Fraction(8 * d ** 4) / eps_tilde ** 4),
        i0=top_level(ta, eps_tilde / (6 * d * d)),
        weight=weight,
        accuracy=accuracy,
    )


@dataclass
class TowerTrace:
    """What a tower run produced besides (u*, phi).

    ``points[i]`` is u_i and ``images[i]`` is G u_i for i = 0..i0.
    """
    params: TowerParameters
    points: list[Point] = field(default_factory=list)
    images: list[Point] = field(default_factory=list)
    depths: list[int] = field(default_factory=list)
    evaluations: int = 0
    solves: int = 0
    transcript: Transcript | None = None

    def a_flags(self) -> list[tuple[int, bool, bool]]:
        """(i, A(eps~, u_{i+1}, u_i, Gu_i), A(eps~, u_i, u_{i+1}, Gu_{i-1})) for 1 <= i < i0."""
        et, d = self.params.eps_tilde, self.params.d
        out = []
        for i in range(1, len(self.points) - 1):
            u, u_next = self.points[i], self.points[i + 1]
            first = a_predicate(et, u_next, u, self.images[i], d)
            second = a_predicate(et, u, u_next, self.images[i - 1], d)
            out.append((i, first, second))
        return out

    def step(self, i: int) -> float:
        return float(np.linalg.norm(self.points[i + 1] - self.points[i]))

    def chain_checks(self) -> list[tuple[int, bool]]:
        """||u_{i+1} - u_i|| < tau ||u_i - u_{i-1}|| + eps~ wherever both A-flags hold."""
        tau, et = float(self.params.tau), float(self.params.eps_tilde)
        slack = config.slack("checkSlack")
        out = []
        for i, first, second in self.a_flags():
            if first and second:
                out.append((i, self.step(i) < tau * self.step(i - 1) + et + slack))
        return out

    def displacement_checks(self) -> list[tuple[int, bool]]:
        """||u_{i+1} - u_i|| < tau^i d + eps~/(1 - tau) along the initial run of held chain links."""
        tau, et, d = float(self.params.tau), float(self.params.eps_tilde), self.params.d
        slack = config.slack("checkSlack")
        out = []
        for i, first, second in self.a_flags():
            if not (first and second):
                break
            out.append((i, self.step(i) < tau ** i * d + et / (1.0 - tau) + slack))
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "points": [[float(c) for c in u] for u in self.points],
            "depths": self.depths,
            "a_flags": [list(f) for f in self.a_flags()],
            "evaluations": self.evaluations,
            "solves": self.solves,
        }


@dataclass
class TowerResult:
    u_star: Point
    phi: PhiFn
    trace: TowerTrace


class _Tower:
    """Lazily evaluated level counterfunctions (Delta_i, V_i) for i < i0."""

    def __init__(
        self,
        T: Operator,
        G: Operator,
        t: float,
        cf: CounterfunctionPair,
        params: TowerParameters,
        budget: EvaluationBudget,
        transcript: Transcript | None,
        reading: LadderReading,
    ) -> None:
        self.T = T
        self.G = G
        self.t = t
        self.cf = cf
        self.params = params
        self.weight = float(params.weight)
        self.budget = budget
        self.transcript = transcript
        self.reading = reading
        self.solves = 0
        self._memo: dict[tuple[int, bytes, int], tuple[EpsProjectionResult, PhiFn]] = {}
        self._pairs: dict[int, CounterfunctionPair] = {}

    def first_weight(self, i: int) -> float:
        return self.t if i == self.params.i0 else self.weight

    def pair_at(self, i: int) -> CounterfunctionPair:
        if i == self.params.i0:
            return self.cf
        if i not in self._pairs:
            self._pairs[i] = CounterfunctionPair(
                lambda u, phi: self.solve(i, u, phi).phi(u),
                lambda u, phi: self.solve(i, u, phi).u,
                name=f"level{i}",
            )
        return self._pairs[i]

    def project(
        self,
        v0: Point,
        i: int,
        phi_prev: PhiFn,
        u_prev: Point,
    ) -> EpsProjectionResult:
        """Pair projection of v0 against (Delta_i, V_i) and (phi_prev, const u_prev)."""
        anchor = u_prev.copy()
        const = CounterfunctionPair(
            lambda v, psi: phi_prev(v),
            lambda v, psi: anchor,
            name=f"anchor{i - 1}",
        )
        self.solves += 1
        return eps_projection_pair(
            v0,
            self.T,
            self.first_weight(i),
            self.weight,
            self.params.accuracy,
            self.pair_at(i),
            const,
            self.T.to_fixed_set(v0),
            self.params.d,
            budget=self.budget,
            transcript=self.transcript,
            level=i,
            reading=self.reading,
        )

    def solve(self, i: int, u: Point, phi: PhiFn) -> EpsProjectionResult:
        key = (i, u.tobytes(), id(phi))
        hit = self._memo.get(key)
        if hit is not None:
            return hit[0]
        result = self.project(self.G(u), i + 1, phi, u)
        self._memo[key] = (result, phi)
        return result


def picard_tower(
    p: Point,
    T: Operator,
    G: Operator,
    eps: Number,
    t: float,
    cf: CounterfunctionPair,
    d: int,
    witness: Point | None = None,
    *,
    budget: EvaluationBudget | None = None,
    transcript: Transcript | None = None,
    params: TowerParameters | None = None,
    reading: LadderReading | str | None = None,
) -> TowerResult:
    """Solve for (u*, phi) with ||Tu* - u*|| < Delta(u*, phi) and the guarded optimality.

    u_0 projects p at weight eps~^2/(6d^2); each u_i (1 <= i <= i0) projects
    G u_{i-1} against (Delta_i, V_i) and (phi_{i-1}, u_{i-1}); the top level
    uses the caller's (Delta, V) with weight t.

    Args:
        p: starting point
        T: nonexpansive operator
        G: tau-contraction
        eps: accuracy in (0, 1]
        t: weight of the caller's V
        cf: the caller's (Delta, V)
        d: confinement bound
        witness: fixed point of T used as first candidate for u_0
        budget: shared evaluation counter
        transcript: records every counterfunction call
        params: precomputed tower constants
        reading: psi-ladder walk of every projection; iteration.ladderReading when None

    Raises:
        SpecValidationError: G is not a contraction or ranges are violated
        BudgetExceededError: the evaluation budget ran out; ``partial`` holds the trace
    """
    if not G.claimed.is_contraction:
        raise SpecValidationError("G must be a strict contraction")
    if G.dim != T.dim:
        raise SpecValidationError("T and G act on different dimensions")
    if not 0.0 <= t <= 1.0:
        raise SpecValidationError(f"t must lie in [0, 1], got {t}")
    if params is None:
        params = tower_parameters(eps, G.claimed.lipschitz, d)
    budget = budget if budget is not None else EvaluationBudget()
    start = as_point(p, T.dim)
    ladder = _ladder_reading(reading)
    tower = _Tower(T, G, t, cf, params, budget, transcript, ladder)
    trace = TowerTrace(params, transcript=transcript)
    logger.info("picard tower: eps~=%s, i0=%d, n_eps~=%d",
                params.eps_tilde, params.i0, params.n_eps_tilde)

    try:
        first = eps_projection(
            start,
            T,
            float(params.weight),
            params.accuracy,
            tower.pair_at(0),
            witness if witness is not None else T.to_fixed_set(start),
            d,
            budget=budget,
            transcript=transcript,
            level=0,
            reading=ladder,
        )
        u, phi = first.u, first.phi
        trace.points.append(u)
        trace.images.append(G(u))
        trace.depths.append(first.depth)
        for i in range(1, params.i0 + 1):
            result = tower.project(trace.images[-1], i, phi, u)
            u, phi = result.u, result.phi
            trace.points.append(u)
            trace.images.append(G(u))
            trace.depths.append(result.depth)
    except BudgetExceededError as e:
        trace.evaluations = budget.used
        trace.solves = tower.solves
        logger.warning("tower stopped after %d evaluations", budget.used)
        raise BudgetExceededError(e.limit, partial=trace) from e

    trace.evaluations = budget.used
    trace.solves = tower.solves
    logger.info("picard tower finished: %d evaluations, %d inner solves",
                budget.used, tower.solves)
    return TowerResult(u, phi, trace)


@dataclass(frozen=True)
class ProblemAudit:
    """Direct re-evaluation of both conjuncts for a returned (u, phi)."""
    residual: float
    delta: float
    guard: bool
    lhs: float
    rhs: float
    slack: float

    @property
    def residual_ok(self) -> bool:
        return self.residual < self.delta + self.slack

    @property
    def implication_ok(self) -> bool:
        return not self.guard or self.lhs < self.rhs + self.slack

    @property
    def passed(self) -> bool:
        return self.residual_ok and self.implication_ok


def audit_problem(
    u: Point,
    phi: PhiFn,
    T: Operator,
    G: Operator,
    cf: CounterfunctionPair,
    t: float,
    eps: Number,
    slack: float | None = None,
) -> ProblemAudit:
    """||Tu - u|| < Delta(u, phi), and ||TV - V|| < phi(V) implies ||Gu - u||^2 < ||Gu - V^t||^2 + eps."""
    if slack is None:
        slack = config.slack("checkSlack")
    e = float(to_fraction(eps))
    v = as_point(cf.v(u, phi), T.dim)
    gap = float(np.linalg.norm(T(v) - v))
    gu = G(u)
    return ProblemAudit(
        residual=float(np.linalg.norm(T(u) - u)),
        delta=float(cf.delta(u, phi)),
        guard=gap == 0.0 or bool(gap < phi(v)),
        lhs=_sq(gu - u),
        rhs=_sq(gu - _mix(u, v, t)) + e,
        slack=slack,
    )
