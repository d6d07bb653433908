"""
Empirical validation harness.

Finds least metastability witnesses on trajectories, re-checks the
quantitative lemmas on concrete data (every premise evaluated, the
conclusion asserted only when the premises hold), audits tower outputs
against counterfunction strategies, and bundles the results into
deterministic JSON reports.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.spatial.distance import cdist

from config_manager import config
from custom_types import Point
from enums import AdversaryStrategy, ConfinementMode, LadderReading, LemmaKind, Scheme, VerifySuite
from error_handler import (
    BudgetExceededError,
    CheckFailedError,
    DivergenceError,
    SpecValidationError,
    TrajectoryTooShortError,
)
from functional_engine import EvaluationBudget, audit_problem, picard_tower
from hilbert_ops import (
    AffineMap,
    ClaimedClass,
    ConditionModulus,
    ConstantMap,
    Operator,
    ProjectAffine,
    ProjectBall,
    ProjectHalfspace,
    as_point,
    compose_in_order,
    cyclic_orders,
    line_pair_modulus,
)
from iterates import Trajectory, asymptotic_residuals, iterate, resolvent_point
from problem_spec import ProblemInstance
from rates import Certificate, asy_rate
from schedules import Number, to_fraction, weighted_tail_sum

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
VACUOUS = "vacuous"
INCONCLUSIVE = "inconclusive"
BUDGET = "budget_exceeded"


# ----------------------------------------------------------------------------
# Reports
# ----------------------------------------------------------------------------

@dataclass
class CheckReport:
    """Outcome of one check.

    Attributes:
        name: check identifier
        status: pass | fail | vacuous (premise false) | inconclusive (side
            condition not met) | budget_exceeded
        premise: whether the premises held, when the check has any
        conclusion: whether the conclusion held, when it was evaluated
        margin: slack left in the deciding inequality (negative on failure)
    """
    name: str
    status: str
    premise: bool | None = None
    conclusion: bool | None = None
    margin: float | None = None
    seed: int | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "status": self.status,
            "premise": self.premise,
            "conclusion": self.conclusion,
            "margin": self.margin,
            "seed": self.seed,
            "details": _plain(self.details),
        }


@dataclass
class SuiteReport:
    suite: str
    seed: int
    checks: list[CheckReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(c.failed for c in self.checks)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.checks:
            out[c.status] = out.get(c.status, 0) + 1
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "passed": self.passed,
            "counts": self.counts(),
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        logger.info("wrote %s report (%d checks) to %s", self.suite, len(self.checks), path)
        return path


def _plain(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [float(x) for x in v.ravel()]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, (np.integer, int, bool)) or v is None or isinstance(v, str):
        return v.item() if isinstance(v, np.generic) else v
    return str(v)


def _slack() -> float:
    return config.slack("checkSlack")


def _seed(seed: int | None) -> int:
    return int(config.get_setting("verify", "seed", 0)) if seed is None else int(seed)


def _dist(x: Point, y: Point) -> float:
    return float(np.linalg.norm(x - y))


# ----------------------------------------------------------------------------
# Metastability witnesses
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class MetaQuery:
    """Find the least n <= cap with all pairs in [n, n + g(n)] within epsilon."""
    epsilon: float
    g: Callable[[int], int]
    cap: int

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise SpecValidationError("metastability query needs epsilon > 0")
        if self.cap < 0:
            raise SpecValidationError("metastability query needs cap >= 0")


@dataclass(frozen=True)
class MetaResult:
    n: int | None
    examined: int

    @property
    def exhausted(self) -> bool:
        return self.n is None


def _window_fits(points: np.ndarray, eps: float) -> bool:
    """max pairwise distance <= eps."""
    extent = points.max(axis=0) - points.min(axis=0)
    if float(extent.max()) > eps:
        return False
    if float(np.linalg.norm(extent)) <= eps:
        return True
    block = 512
    for start in range(0, len(points), block):
        if float(cdist(points[start:start + block], points[start:]).max()) > eps:
            return False
    return True


def required_length(q: MetaQuery) -> int:
    return max(n + max(0, int(q.g(n))) for n in range(q.cap + 1)) + 1


def empirical_metastability(traj: Trajectory, q: MetaQuery) -> MetaResult:
    """Exact enumeration of n = 0..cap; windows are not monotone in n.

    Raises:
        TrajectoryTooShortError: some window [n, n + g(n)] with n <= cap runs past the end
    """
    needed = required_length(q)
    if needed > len(traj):
        raise TrajectoryTooShortError(needed, len(traj))
    points = traj.points
    for n in range(q.cap + 1):
        end = n + max(0, int(q.g(n)))
        if _window_fits(points[n:end + 1], q.epsilon):
            logger.debug("metastable window found at n=%d (g(n)=%d)", n, end - n)
            return MetaResult(n, n + 1)
    return MetaResult(None, q.cap + 1)


def largest_cap(length: int, g: Callable[[int], int], limit: int | None = None) -> int:
    """Largest n such that every window up to n fits in a trajectory of the given length."""
    cap = -1
    upper = length if limit is None else min(length, limit + 1)
    for n in range(upper):
        if n + max(0, int(g(n))) >= length:
            break
        cap = n
    return cap


# ----------------------------------------------------------------------------
# VIP certificate
# ----------------------------------------------------------------------------

def _fixed_map(ops: Sequence[Operator]) -> Operator:
    return ops[0] if len(ops) == 1 else compose_in_order(ops, list(range(len(ops))))


def check_vip_certificate(
    G: Operator,
    u_n: Point,
    ops: Sequence[Operator],
    eps: float,
    eps_prime: float,
    samples: int | None = None,
    seed: int | None = None,
    radius: float = 1.0,
) -> CheckReport:
    """<G u_n - u_n, v - u_n> <= eps for sampled v with every ||T_i v - v|| <= eps'.

    Samples project random points around u_n onto the fixed set and perturb
    them by at most eps'/2.

    Raises:
        SpecValidationError: no sample passed the residual filter
    """
    samples = samples or int(config.get_setting("verify", "samples", 1000))
    seed = _seed(seed)
    rng = np.random.default_rng(seed)
    u = as_point(u_n, G.dim)
    direction = G(u) - u
    fixed = _fixed_map(ops)
    slack = _slack()
    used = violations = 0
    worst = -math.inf
    for _ in range(samples):
        x = u + radius * rng.standard_normal(u.size)
        v = fixed.to_fixed_set(x)
        if eps_prime > 0:
            step = rng.standard_normal(u.size)
            v = v + (eps_prime / 2.0) * rng.uniform() * step / max(float(np.linalg.norm(step)), 1e-300)
        if max(_dist(op(v), v) for op in ops) > eps_prime + slack:
            continue
        used += 1
        value = float(np.dot(direction, v - u))
        worst = max(worst, value)
        if value > eps + slack:
            violations += 1
    if used == 0:
        raise SpecValidationError("no near-fixed-point samples were generated")
    return CheckReport(
        "vip_certificate",
        FAIL if violations else PASS,
        premise=True,
        conclusion=violations == 0,
        margin=eps - worst,
        seed=seed,
        details={"samples": used, "violations": violations, "eps": eps, "eps_prime": eps_prime},
    )


# ----------------------------------------------------------------------------
# Lemma checks
# ----------------------------------------------------------------------------

def _outcome(name: str, premise: bool, conclusion: bool, margin: float, **details: Any) -> CheckReport:
    if not premise:
        return CheckReport(name, VACUOUS, False, conclusion, margin, details=details)
    return CheckReport(name, PASS if conclusion else FAIL, True, conclusion, margin, details=details)


def _inconclusive(name: str, reason: str, **details: Any) -> CheckReport:
    return CheckReport(name, INCONCLUSIVE, details={"reason": reason, **details})


def _check_switch(x: Mapping[str, Any]) -> CheckReport:
    u_star, u, v = as_point(x["u_star"]), as_point(x["u"]), as_point(x["v"])
    d, eps = float(x["d"]), float(x["eps"])
    if _dist(u_star, v) > d:
        return _inconclusive("switch", "||u* - v|| > d")
    t = eps / (3.0 * d * d)
    w = (1.0 - t) * u_star + t * v
    premise = _dist(u_star, u) ** 2 <= eps * eps / (2.0 * d * d) + _dist(u, w) ** 2
    value = float(np.dot(u - u_star, v - u_star))
    return _outcome("switch", premise, value < eps + _slack(), eps - value, inner=value)


def _check_vip_modulus(x: Mapping[str, Any]) -> CheckReport:
    G: Operator = x["G"]
    u, v, w = as_point(x["u"]), as_point(x["v"]), as_point(x["w"])
    d, eps = float(x["d"]), float(x["eps"])
    tau = G.claimed.lipschitz
    if _dist(w, u) > d or _dist(G(v), v) > d:
        return _inconclusive("vip_modulus", "points leave the diameter bound")
    near = _dist(u, v) <= eps / (2.0 * d * (2.0 + tau))
    small = float(np.dot(G(u) - u, w - u)) <= eps / 2.0
    value = float(np.dot(G(v) - v, w - v))
    return _outcome("vip_modulus", near and small, value <= eps + _slack(), eps - value, inner=value)


def _check_core(x: Mapping[str, Any], diagonal: bool) -> CheckReport:
    name = "core_single_diag" if diagonal else "core_single"
    T: Operator = x["T"]
    G: Operator = x["G"]
    lam, h = float(x["lam"]), int(x["h"])
    d, eps = float(x["d"]), float(x["eps"])
    u_star = as_point(x["u_star"])
    tau = G.claimed.lipschitz
    v_n = as_point(x["v_n"]) if "v_n" in x else resolvent_point(T, G, lam, x.get("tol"))
    if lam < 1.0 / h:
        return _inconclusive(name, "lambda_n < 1/h(n)")
    if _dist(v_n, u_star) > d:
        return _inconclusive(name, "||v_n - u*|| > d")
    gu = G(u_star) - u_star
    residual = _dist(T(u_star), u_star)
    eps2 = eps * eps * (1.0 - tau)
    if diagonal:
        premise = (
            residual <= eps2 / (6.0 * d * h)
            and float(np.dot(gu, v_n - u_star)) <= eps2 / 2.0
        )
    else:
        v = as_point(x["v"])
        premise = (
            residual <= eps2 / (9.0 * d * h)
            and float(np.dot(gu, v_n - v)) <= eps2 / 3.0
            and float(np.dot(gu, v - u_star)) <= eps2 / 3.0
        )
    gap = _dist(v_n, u_star)
    return _outcome(name, premise, gap <= eps + _slack(), eps - gap, distance=gap)


def _check_perm(x: Mapping[str, Any]) -> CheckReport:
    ops: Sequence[Operator] = x["ops"]
    rho_hat: ConditionModulus = x["rho_hat"]
    point, p = as_point(x["x"]), as_point(x["p"])
    d, eps = int(x["d"]), float(x["eps"])
    k = int(x.get("k", 1))
    relax = float(x.get("relax", 1.0))
    n_ops = len(ops)
    if not 1 <= k <= n_ops - 1:
        return _inconclusive("perm", f"k = {k} outside 1..{n_ops - 1}")
    if _dist(point, p) > d:
        return _inconclusive("perm", "||x - p|| > d")
    shifted = compose_in_order(ops, cyclic_orders(n_ops)[n_ops - k])
    threshold = relax * rho_hat(d, eps / (2 * n_ops + 1))
    composite = _dist(shifted(point), point)
    worst = max(_dist(op(point), point) for op in ops)
    return _outcome(
        "perm",
        composite < threshold,
        worst < eps + _slack(),
        eps - worst,
        composite=composite,
        threshold=threshold,
    )


def _check_fact_sum(x: Mapping[str, Any]) -> CheckReport:
    lambdas = [float(v) for v in x["lambdas"]]
    m, n = int(x["m"]), int(x["n"])
    if not 0 <= m <= n < len(lambdas):
        return _inconclusive("fact_sum", "need 0 <= m <= n < len(lambdas)")
    premise = all(0.0 <= v <= 1.0 for v in lambdas[m:n + 1])
    total = weighted_tail_sum(lambdas, m, n)
    return _outcome("fact_sum", premise, total <= 1.0 + _slack(), 1.0 - total, total=total)


def _check_subseq(x: Mapping[str, Any]) -> CheckReport:
    vs = np.asarray(x["vs"], dtype=np.float64)
    u = as_point(x["u"])
    g: Callable[[int], int] = x["g"]
    eps = float(x["eps"])
    m = int(x["m"])
    gm = int(g(m))
    if not (0 <= m < len(vs) and 0 <= gm < len(vs)):
        return _inconclusive("subseq", "index outside the sequence")
    branch = x.get("branch", True)
    index = gm if branch and _dist(vs[gm], u) > eps / 2.0 else m
    premise = _dist(vs[index], u) <= eps / 2.0
    gap = _dist(vs[gm], vs[m])
    return _outcome("subseq", premise, gap <= eps + _slack(), eps - gap, index=index)


def _check_z_t(x: Mapping[str, Any]) -> CheckReport:
    T: Operator = x["T"]
    G: Operator = x["G"]
    t, d, eps = float(x["t"]), float(x["d"]), float(x["eps"])
    if not 0.0 < t <= 1.0:
        return _inconclusive("z_t", "t outside (0, 1]")
    z = resolvent_point(T, G, t, x.get("tol"))
    tz = T(z)
    if _dist(tz, G(tz)) > d:
        return _inconclusive("z_t", "||Tz - GTz|| > d")
    residual = _dist(z, tz)
    return _outcome("z_t", t < eps / d, residual < eps + _slack(), eps - residual, residual=residual)


_LEMMAS: dict[LemmaKind, Callable[[Mapping[str, Any]], CheckReport]] = {
    LemmaKind.SWITCH: _check_switch,
    LemmaKind.VIP_MODULUS: _check_vip_modulus,
    LemmaKind.CORE_SINGLE: lambda x: _check_core(x, diagonal=False),
    LemmaKind.CORE_SINGLE_DIAG: lambda x: _check_core(x, diagonal=True),
    LemmaKind.PERM: _check_perm,
    LemmaKind.FACT_SUM: _check_fact_sum,
    LemmaKind.SUBSEQ: _check_subseq,
    LemmaKind.Z_T: _check_z_t,
}


def check_lemma(kind: LemmaKind | str, inputs: Mapping[str, Any]) -> CheckReport:
    """Evaluate the premises of one lemma and, when they hold, its conclusion.

    Required inputs per kind:

    - switch: u_star, u, v, d, eps
    - vip_modulus: G, u, v, w, d, eps
    - core_single: T, G, lam, h, u_star, v, d, eps (v_n optional)
    - core_single_diag: T, G, lam, h, u_star, d, eps (v_n optional)
    - perm: ops, rho_hat, x, p, d, eps, k (relax scales the threshold)
    - fact_sum: lambdas, m, n
    - subseq: vs, u, g, eps, m (branch=False tests the premise at m)
    - z_t: T, G, t, d, eps
    """
    kind = LemmaKind(kind)
    try:
        return _LEMMAS[kind](inputs)
    except KeyError as e:
        raise SpecValidationError(f"{kind} check is missing input {e}") from e


# ----------------------------------------------------------------------------
# Randomized lemma suites
# ----------------------------------------------------------------------------

@dataclass
class FuzzReport:
    """Counts over randomized cases plus one engineered violation."""
    kind: LemmaKind
    seed: int
    cases: int
    premise_held: int = 0
    violations: int = 0
    vacuous: int = 0
    inconclusive: int = 0
    negative: CheckReport | None = None
    first_violation: dict[str, Any] | None = None

    @property
    def negative_detected(self) -> bool:
        return self.negative is not None and self.negative.conclusion is False

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.negative_detected

    def to_check(self) -> CheckReport:
        return CheckReport(
            f"fuzz[{self.kind}]",
            PASS if self.passed else FAIL,
            premise=self.premise_held > 0,
            conclusion=self.violations == 0,
            seed=self.seed,
            details={
                "cases": self.cases,
                "premise_held": self.premise_held,
                "violations": self.violations,
                "vacuous": self.vacuous,
                "inconclusive": self.inconclusive,
                "negative_detected": self.negative_detected,
                "first_violation": self.first_violation,
            },
        )


def _ball_point(rng: np.random.Generator, dim: int, radius: float) -> Point:
    step = rng.standard_normal(dim)
    step /= max(float(np.linalg.norm(step)), 1e-300)
    return radius * rng.uniform() ** (1.0 / dim) * step


def _log_scale(rng: np.random.Generator, low: float = 1e-4, high: float = 1.0) -> float:
    return float(math.exp(rng.uniform(math.log(low), math.log(high))))


def _affine_contraction(rng: np.random.Generator, dim: int, tau: float, anchor: Point) -> AffineMap:
    """x -> tau R x + (I - tau R) anchor with R a random rotation; fixed point anchor."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    matrix = tau * q
    return AffineMap(matrix, anchor - matrix @ anchor, ClaimedClass.contraction(tau), anchor)


def _random_case(kind: LemmaKind, rng: np.random.Generator) -> dict[str, Any]:
    dim = 2
    if kind is LemmaKind.SWITCH:
        d = int(rng.integers(1, 4))
        u_star = _ball_point(rng, dim, d / 2.0)
        v = u_star + _ball_point(rng, dim, d)
        u = u_star + _log_scale(rng) * d * rng.standard_normal(dim)
        return {"u_star": u_star, "u": u, "v": v, "d": d, "eps": rng.uniform(0.01, 1.0)}
    if kind is LemmaKind.VIP_MODULUS:
        tau = rng.uniform(0.0, 0.9)
        G = _affine_contraction(rng, dim, tau, _ball_point(rng, dim, 0.5))
        u = _ball_point(rng, dim, 0.5)
        v = ProjectBall(np.zeros(dim), 0.5)(u + _log_scale(rng, 1e-5, 0.5) * rng.standard_normal(dim))
        w = u + _log_scale(rng, 1e-3, 1.0) * (_ball_point(rng, dim, 0.5) - u)
        return {"G": G, "u": u, "v": v, "w": w, "d": 1, "eps": rng.uniform(0.05, 1.0)}
    if kind in (LemmaKind.CORE_SINGLE, LemmaKind.CORE_SINGLE_DIAG):
        T = ProjectBall(np.zeros(dim), 0.5)
        tau = rng.uniform(0.0, 0.5)
        G = _affine_contraction(rng, dim, tau, _ball_point(rng, dim, 1.5))
        lam = rng.uniform(0.1, 1.0)
        v_n = resolvent_point(T, G, lam, 1e-12)
        u_star = T.to_fixed_set(v_n + _log_scale(rng, 1e-5, 1.0) * rng.standard_normal(dim))
        case = {
            "T": T, "G": G, "lam": lam, "h": math.ceil(1.0 / lam), "v_n": v_n,
            "u_star": u_star, "d": 2, "eps": rng.uniform(0.05, 1.0),
        }
        if kind is LemmaKind.CORE_SINGLE:
            case["v"] = u_star + _log_scale(rng, 1e-4, 0.5) * (_ball_point(rng, dim, 0.5) - u_star)
        return case
    if kind is LemmaKind.PERM:
        theta = rng.uniform(0.2, 1.4)
        ops = _line_pair(theta)
        x = _log_scale(rng, 1e-4, 1.0) * 2.0 * _ball_point(rng, dim, 1.0)
        return {
            "ops": ops, "rho_hat": line_pair_modulus(theta), "x": x, "p": np.zeros(dim),
            "d": 2, "eps": rng.uniform(0.01, 1.0), "k": 1,
        }
    if kind is LemmaKind.FACT_SUM:
        size = int(rng.integers(1, 40))
        m = int(rng.integers(0, size))
        n = int(rng.integers(m, size))
        return {"lambdas": rng.uniform(0.0, 1.0, size), "m": m, "n": n}
    if kind is LemmaKind.SUBSEQ:
        size = 30
        vs = np.cumsum(rng.standard_normal((size, dim)) * _log_scale(rng, 1e-3, 0.5), axis=0)
        table = rng.integers(0, size, size)
        m = int(rng.integers(0, size))
        u = vs[m] + _log_scale(rng, 1e-3, 1.0) * rng.standard_normal(dim)
        return {"vs": vs, "u": u, "g": lambda i: int(table[i]), "eps": rng.uniform(0.01, 1.0), "m": m}
    # z_t
    T = ProjectHalfspace(np.array([1.0, 0.0]), 0.0)
    tau = rng.uniform(0.0, 0.5)
    G = _affine_contraction(rng, dim, tau, _ball_point(rng, dim, 1.0))
    eps = rng.uniform(0.2, 1.0)
    d = int(rng.integers(2, 4))
    return {"T": T, "G": G, "t": rng.uniform(0.5, 1.0) * eps / d, "d": d, "eps": eps, "tol": 1e-9}


def _line_pair(theta: float) -> tuple[Operator, Operator]:
    first = ProjectAffine(np.array([[1.0, 0.0]]), np.zeros(2))
    second = ProjectAffine(np.array([[math.cos(theta), math.sin(theta)]]), np.zeros(2))
    return first, second


def negative_case(kind: LemmaKind | str) -> dict[str, Any]:
    """Inputs with a deliberately broken premise under which the conclusion fails."""
    kind = LemmaKind(kind)
    origin = np.zeros(2)
    if kind is LemmaKind.SWITCH:
        b = np.array([1.0, 0.0])
        return {"u_star": origin, "u": b, "v": b, "d": 1, "eps": 0.1}
    if kind is LemmaKind.VIP_MODULUS:
        return {
            "G": ConstantMap(origin), "u": origin, "v": np.array([0.5, 0.0]),
            "w": np.array([-0.5, 0.0]), "d": 1, "eps": 0.1,
        }
    if kind in (LemmaKind.CORE_SINGLE, LemmaKind.CORE_SINGLE_DIAG):
        T = ProjectBall(origin, 0.5)
        G = ConstantMap(origin)
        case = {
            "T": T, "G": G, "lam": 0.5, "h": 2, "u_star": np.array([1.5, 0.0]),
            "d": 2, "eps": 0.1, "v": np.array([1.5, 0.0]),
        }
        return case
    if kind is LemmaKind.PERM:
        theta = math.pi / 6.0
        return {
            "ops": _line_pair(theta), "rho_hat": line_pair_modulus(theta),
            "x": np.array([1.2, 0.0]), "p": origin, "d": 2, "eps": 0.5, "k": 1, "relax": 10.0,
        }
    if kind is LemmaKind.FACT_SUM:
        return {"lambdas": [1.5], "m": 0, "n": 0}
    if kind is LemmaKind.SUBSEQ:
        vs = np.array([[0.0, 0.0], [5.0, 0.0]])
        return {"vs": vs, "u": origin, "g": lambda i: 1, "eps": 0.5, "m": 0, "branch": False}
    return {
        "T": ProjectHalfspace(np.array([1.0, 0.0]), 0.0),
        "G": ConstantMap(np.array([3.0, 0.0])),
        "t": 1.0, "d": 4, "eps": 0.5,
    }


def fuzz_lemma(kind: LemmaKind | str, cases: int | None = None, seed: int | None = None) -> FuzzReport:
    """Randomized cases for one lemma, plus its engineered negative case."""
    kind = LemmaKind(kind)
    cases = cases if cases is not None else int(config.get_setting("verify", "fuzzCases", 1000))
    seed = _seed(seed)
    rng = np.random.default_rng([seed, list(LemmaKind).index(kind)])
    report = FuzzReport(kind, seed, cases)
    for i in range(cases):
        outcome = check_lemma(kind, _random_case(kind, rng))
        if outcome.status == INCONCLUSIVE:
            report.inconclusive += 1
        elif outcome.status == VACUOUS:
            report.vacuous += 1
        else:
            report.premise_held += 1
            if outcome.failed:
                report.violations += 1
                if report.first_violation is None:
                    report.first_violation = {"case": i, "margin": outcome.margin, **outcome.details}
    report.negative = check_lemma(kind, negative_case(kind))
    logger.info("fuzz %s: %d cases, %d with premises, %d violations, negative detected: %s",
                kind, cases, report.premise_held, report.violations, report.negative_detected)
    return report


# ----------------------------------------------------------------------------
# Confinement
# ----------------------------------------------------------------------------

def check_confinement(
    traj: Trajectory,
    v: Point,
    w: Point | None,
    d: int,
    tau: float,
    mode: ConfinementMode | str,
    *,
    G: Operator,
    ops: Sequence[Operator],
    resolvent_indices: Sequence[int] = (),
) -> CheckReport:
    """Iterates, resolvent points and G-images stay within d/2 of the common fixed point v.

    G-images are taken of the resolvent points for a single map and of the
    iterates for a family, as in the two confinement corollaries.

    Raises:
        SpecValidationError: w (the fixed point of G) is missing
    """
    mode = ConfinementMode(mode)
    if w is None:
        raise SpecValidationError("confinement hypotheses need the fixed point w of G")
    v = as_point(v)
    slack = _slack()
    start_bound = d / 2.0 if mode is ConfinementMode.DIAM_SINGLE else d / 4.0
    hypotheses = {
        "start": _dist(traj[0], v) <= start_bound + slack,
        "v_Gv": _dist(v, G(v)) <= d * (1.0 - tau) / 4.0 + slack,
        "v_w": _dist(v, w) <= d / (4.0 * (1.0 + tau)) + slack,
        "fixed": all(_dist(op(v), v) <= slack for op in ops),
    }
    name = f"confinement[{mode}]"
    if not all(hypotheses.values()):
        return CheckReport(name, INCONCLUSIVE, premise=False, details={"hypotheses": hypotheses})

    radius = d / 2.0
    iterate_gap = float(np.max(np.linalg.norm(traj.points - v, axis=1)))
    gaps = {"iterates": iterate_gap}
    if len(ops) == 1 and resolvent_indices:
        resolvents = [resolvent_point(ops[0], G, traj.schedule.lambda_at(n)) for n in resolvent_indices]
        gaps["resolvents"] = max(_dist(p, v) for p in resolvents)
        gaps["images"] = max(_dist(G(p), v) for p in resolvents)
    elif len(ops) > 1:
        gaps["images"] = max(_dist(G(p), v) for p in traj.points)
    worst = max(gaps.values())
    return CheckReport(
        name,
        PASS if worst <= radius + slack else FAIL,
        premise=True,
        conclusion=worst <= radius + slack,
        margin=radius - worst,
        details={"gaps": gaps, "radius": radius, "steps": traj.steps},
    )


# ----------------------------------------------------------------------------
# Rates against measurements
# ----------------------------------------------------------------------------

def asy_regularity_check(
    instance: ProblemInstance,
    eps: Number,
    rho: ConditionModulus | None = None,
) -> CheckReport:
    """Run the cyclic scheme to n = chi_hat(eps) and measure the composite residual there."""
    e = float(to_fraction(eps))
    n = asy_rate(eps, instance.bundle, instance.d, instance.n_ops, rho)
    traj = iterate(Scheme.HSDM_CYCLIC, instance.ops, instance.G, instance.schedule, instance.u0, n)
    residual = asymptotic_residuals(traj, instance.ops, [n])[0]
    ok = residual <= e + _slack()
    return CheckReport(
        f"asy[{eps}]",
        PASS if ok else FAIL,
        premise=True,
        conclusion=ok,
        margin=e - residual,
        details={"chi_hat": n, "residual": residual, "N": instance.n_ops},
    )


def bound_witness_consistency(
    certificate: Certificate,
    traj: Trajectory,
    g: Callable[[int], int],
) -> CheckReport:
    """Search the least metastable n up to min(bound, longest checkable cap) and attach it."""
    eps = float(certificate.epsilon)
    bound = certificate.bound.value
    cap = largest_cap(len(traj), g, bound)
    name = f"witness[{certificate.mode}]"
    if cap < 0:
        return _inconclusive(name, "trajectory too short for any window")
    result = empirical_metastability(traj, MetaQuery(eps, g, cap))
    if result.exhausted:
        covered = bound is not None and cap >= bound
        return CheckReport(
            name,
            FAIL if covered else INCONCLUSIVE,
            details={"cap": cap, "bound": certificate.bound.describe()},
        )
    try:
        certificate.attach_witness(result.n)
    except CheckFailedError as e:
        return CheckReport(name, FAIL, conclusion=False, details={"witness": result.n, "error": str(e)})
    margin = None if bound is None else float(bound - (result.n or 0))
    return CheckReport(
        name,
        PASS,
        premise=True,
        conclusion=True,
        margin=margin,
        details={"witness": result.n, "cap": cap, "status": str(certificate.status)},
    )


# ----------------------------------------------------------------------------
# Adversaries
# ----------------------------------------------------------------------------

def build_adversary(
    instance: ProblemInstance,
    strategy: AdversaryStrategy | str,
    eps: Number,
    seed: int,
) -> Any:
    """Counterfunctions of the named strategy for a single-map instance."""
    from adversaries import (
        anticipating_adversary,
        branch_adversary,
        constant_adversary,
        random_adversary,
    )

    strategy = AdversaryStrategy(strategy)
    witness = instance.witness if instance.witness is not None else instance.T.to_fixed_set(instance.u0)
    if strategy is AdversaryStrategy.CONSTANT:
        return constant_adversary(witness)
    if strategy is AdversaryStrategy.RANDOM:
        return random_adversary(witness, instance.d / 2.0, seed)
    if strategy is AdversaryStrategy.BRANCH:
        base = random_adversary(witness, instance.d / 2.0, seed)
        return branch_adversary(base, instance.G, witness)
    return anticipating_adversary(instance.T, instance.G, instance.schedule, instance.g, eps, instance.d)


def adversary_suite(
    instance: ProblemInstance,
    strategy: AdversaryStrategy | str,
    eps: Number,
    *,
    runs: int = 1,
    seed: int | None = None,
    budget: int | None = None,
    reading: LadderReading | str | None = None,
) -> list[CheckReport]:
    """Run the tower against a strategy and audit both conjuncts of every result.

    Budget exhaustion, including a psi-ladder too deep to evaluate, is reported
    with status budget_exceeded, never as a failure.
    """
    strategy = AdversaryStrategy(strategy)
    seed = _seed(seed)
    reports: list[CheckReport] = []
    for run in range(runs):
        run_seed = seed + run
        adversary = build_adversary(instance, strategy, eps, run_seed)
        name = f"adversary[{strategy}#{run}]"
        counter = EvaluationBudget(budget)
        try:
            result = picard_tower(
                instance.u0, instance.T, instance.G, eps, adversary.t, adversary.cf, instance.d,
                budget=counter, reading=reading,
            )
            audit = audit_problem(result.u_star, result.phi, instance.T, instance.G,
                                  adversary.cf, adversary.t, eps)
        except RecursionError:
            reports.append(CheckReport(name, BUDGET, seed=run_seed,
                                       details={"limit": "recursion", "used": counter.used}))
            continue
        except BudgetExceededError as e:
            reports.append(CheckReport(name, BUDGET, seed=run_seed,
                                       details={"limit": e.limit, "used": counter.used}))
            continue
        except DivergenceError as e:
            reports.append(CheckReport(name, FAIL, seed=run_seed, details={"error": str(e)}))
            continue
        reports.append(CheckReport(
            name,
            PASS if audit.passed else FAIL,
            premise=True,
            conclusion=audit.passed,
            margin=min(audit.delta - audit.residual, audit.rhs - audit.lhs if audit.guard else math.inf),
            seed=run_seed,
            details={
                "residual": audit.residual,
                "delta": audit.delta,
                "guard": audit.guard,
                "evaluations": result.trace.evaluations,
                "i0": result.trace.params.i0,
            },
        ))
    return reports


# ----------------------------------------------------------------------------
# Suites
# ----------------------------------------------------------------------------

def run_suite(
    instance: ProblemInstance,
    suite: VerifySuite | str,
    *,
    eps: Number = 1,
    seed: int | None = None,
    budget: int | None = None,
    cases: int | None = None,
    ladder: LadderReading | str | None = None,
) -> SuiteReport:
    """Run one named suite (or all) on an instance."""
    suite = VerifySuite(suite)
    seed = _seed(seed)
    report = SuiteReport(str(suite), seed)
    wanted = (
        [VerifySuite.LEMMAS, VerifySuite.ADVERSARY, VerifySuite.CONFINEMENT]
        if suite is VerifySuite.ALL else [suite]
    )
    if VerifySuite.LEMMAS in wanted:
        for kind in LemmaKind:
            report.checks.append(fuzz_lemma(kind, cases, seed).to_check())
        if instance.solution is not None:
            report.checks.append(check_vip_certificate(
                instance.G, instance.solution, instance.ops, float(to_fraction(eps)), 0.0,
                cases, seed, radius=float(instance.d),
            ))
    if VerifySuite.ADVERSARY in wanted:
        if instance.n_ops != 1:
            report.checks.append(_inconclusive("adversary", "counterfunction play needs a single map"))
        else:
            for strategy in AdversaryStrategy:
                report.checks.extend(adversary_suite(
                    instance, strategy, eps, seed=seed, budget=budget, reading=ladder,
                ))
    if VerifySuite.CONFINEMENT in wanted:
        report.checks.append(_confinement_for(instance))
    logger.info("suite %s: %s", suite, report.counts())
    return report


def _confinement_for(instance: ProblemInstance) -> CheckReport:
    if instance.witness is None:
        return _inconclusive("confinement", "spec declares no common fixed point")
    steps = instance.spec.steps
    traj = iterate(instance.default_scheme, instance.ops, instance.G, instance.schedule, instance.u0, steps)
    mode = ConfinementMode.DIAM_FAMILY if instance.is_family else ConfinementMode.DIAM_SINGLE
    indices = sorted({0, 1, 10, steps // 2, steps}) if steps else [0]
    return check_confinement(
        traj, instance.witness, instance.fixed_point_g, instance.d, instance.tau, mode,
        G=instance.G, ops=instance.ops, resolvent_indices=indices,
    )
