"""
Iteration schemes and the resolvent path.

Schemes (step n -> n+1 always uses lambda_{n+1}):

- hsdm_single: u_{n+1} = (1 - l) T u_n + l G(T u_n)
- hsdm_cyclic: same with T replaced by ops[n mod N]
- viscosity:   u_{n+1} = l f(u_n or T u_n) + (1 - l) T u_n
- proj_grad:   u_{n+1} = P_S(u_n - mu F(u_n))

The resolvent point v solves v = (1 - l) T v + l G(T v); it is the unique
fixed point of a contraction with factor 1 - l (1 - tau) and is found by
Picard iteration with an a-priori step bound.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from config_manager import config
from custom_types import FloatArray, Point, PointArray
from enums import Scheme, ViscosityOrdering
from error_handler import (
    DivergenceError,
    ResolventDivergenceError,
    SpecValidationError,
    TrajectoryTooShortError,
)
from hilbert_ops import (
    Compose,
    ConvexCombine,
    MonotoneOpSpec,
    Operator,
    as_point,
    contraction_from_monotone,
    identity,
)
from schedules import Schedule

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """Iterates u_0..u_steps of one scheme run.

    Attributes:
        points: array of shape (steps + 1, m)
        scheme: scheme that produced it
        schedule: step-size schedule
        lambdas: lambda_n for n = 0..steps
        residual_log: residual_log[n] = ||T_[n+1] u_n - u_{n+1}||
    """
    points: PointArray
    scheme: Scheme
    schedule: Schedule
    lambdas: FloatArray
    residual_log: FloatArray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        if self.points.ndim != 2:
            raise SpecValidationError("trajectory points must be a 2-D array")
        if len(self.residual_log) != len(self.points) - 1:
            raise SpecValidationError("residual log must have one entry per step")

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __getitem__(self, n: int) -> Point:
        return self.points[n]

    @property
    def steps(self) -> int:
        return len(self) - 1

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def final(self) -> Point:
        return self.points[-1]

    def write_csv(self, path: str | Path) -> Path:
        """One row per index: n, lambda_n, coordinates, residual (nan for n = 0)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        n = np.arange(len(self), dtype=np.float64)[:, None]
        residual = np.concatenate(([np.nan], self.residual_log))[:, None]
        table = np.hstack((n, self.lambdas[:, None], self.points, residual))
        header = ",".join(["n", "lambda", *(f"x{k}" for k in range(self.dim)), "residual"])
        fmt = ["%d", "%.17g", *(["%.17g"] * self.dim), "%.17g"]
        np.savetxt(path, table, delimiter=",", header=header, comments="", fmt=fmt)
        logger.info("wrote %d trajectory rows to %s", len(self), path)
        return path

    to_csv = write_csv


def _as_ops(ops: Operator | Sequence[Operator]) -> tuple[Operator, ...]:
    if isinstance(ops, Operator):
        return (ops,)
    result = tuple(ops)
    if not result:
        raise SpecValidationError("at least one operator is required")
    return result


def _as_contraction(g: Operator | MonotoneOpSpec, mu: float | None) -> Operator:
    if isinstance(g, MonotoneOpSpec):
        if mu is None:
            raise SpecValidationError("a monotone map needs mu to form G = I - mu F")
        return contraction_from_monotone(g, mu)
    return g


def iterate(
    scheme: Scheme | str,
    ops: Operator | Sequence[Operator],
    g_or_f: Operator | MonotoneOpSpec,
    schedule: Schedule,
    u0: Point,
    steps: int,
    *,
    mu: float | None = None,
    ordering: ViscosityOrdering | str = ViscosityOrdering.POINT,
) -> Trajectory:
    """Run one iteration scheme for a number of steps.

    Args:
        scheme: which recursion to run
        ops: T (single) or T_1..T_N in cyclic order; P_S for proj_grad
        g_or_f: contraction G (hsdm), viscosity map f, or monotone F (proj_grad;
            for hsdm a monotone F is turned into G = I - mu F)
        schedule: step sizes lambda_n
        u0: starting point
        steps: number of steps; 0 returns [u0]
        mu: step for proj_grad and for building G from F
        ordering: viscosity argument, f(u_n) or f(T u_n)

    Raises:
        SpecValidationError: dimension mismatch or missing parameters
        DivergenceError: non-finite iterate
    """
    scheme = Scheme(scheme)
    ordering = ViscosityOrdering(ordering)
    operators = _as_ops(ops)
    if steps < 0:
        raise SpecValidationError("steps must be >= 0")
    u = as_point(u0, operators[0].dim)
    dims = {op.dim for op in operators}
    if len(dims) != 1:
        raise SpecValidationError(f"operators mix dimensions {sorted(dims)}")
    if scheme is Scheme.HSDM_SINGLE and len(operators) != 1:
        raise SpecValidationError("hsdm_single takes exactly one operator")

    if scheme is Scheme.PROJ_GRAD:
        if not isinstance(g_or_f, MonotoneOpSpec):
            raise SpecValidationError("proj_grad needs a monotone map F")
        if mu is None or not 0.0 < mu < g_or_f.mu_upper():
            raise SpecValidationError(f"proj_grad needs mu in (0, 2*eta/kappa^2), got {mu}")
        F = g_or_f
        g_map: Operator | None = None
    else:
        g_map = _as_contraction(g_or_f, mu)
        if g_map.dim != u.size:
            raise SpecValidationError("G/f dimension does not match the operators")

    points = np.empty((steps + 1, u.size))
    points[0] = u
    lambdas = schedule.lambdas(steps + 1)
    residuals = np.empty(steps)
    n_ops = len(operators)
    report_every = max(1, steps // 10)

    for n in range(steps):
        t_op = operators[n % n_ops]
        lam = lambdas[n + 1]
        tu = t_op(u)
        if scheme is Scheme.PROJ_GRAD:
            u_next = operators[0](u - mu * F(u))  # type: ignore[operator]
        elif scheme is Scheme.VISCOSITY:
            assert g_map is not None
            arg = u if ordering is ViscosityOrdering.POINT else tu
            u_next = lam * g_map(arg) + (1.0 - lam) * tu
        else:
            assert g_map is not None
            u_next = (1.0 - lam) * tu + lam * g_map(tu)
        if not np.all(np.isfinite(u_next)):
            raise DivergenceError(f"{scheme} produced a non-finite iterate at step {n + 1}")
        residuals[n] = float(np.linalg.norm(tu - u_next))
        points[n + 1] = u_next
        u = u_next
        if (n + 1) % report_every == 0:
            logger.debug("%s step %d/%d residual %.3e", scheme, n + 1, steps, residuals[n])

    logger.info("%s: %d steps, final residual %s", scheme, steps,
                f"{residuals[-1]:.3e}" if steps else "n/a")
    return Trajectory(points, scheme, schedule, lambdas, residuals)


# ----------------------------------------------------------------------------
# Resolvent path
# ----------------------------------------------------------------------------

def resolvent_operator(T: Operator, G: Operator, lam: float) -> Operator:
    """T^(lam) = (1 - lam) T + lam G o T, a contraction with factor 1 - lam (1 - tau)."""
    if not 0.0 < lam <= 1.0:
        raise SpecValidationError(f"lambda must lie in (0, 1], got {lam}")
    if not G.claimed.is_contraction:
        raise SpecValidationError("G must be a strict contraction")
    return Compose((ConvexCombine(1.0 - lam, identity(T.dim), G), T))


def resolvent_step_bound(lam: float, tau: float, tol: float, d0: float) -> int:
    """A-priori Picard step count ceil(ln(tol * lam (1 - tau) / d0) / ln(1 - lam (1 - tau)))."""
    gap = lam * (1.0 - tau)
    q = 1.0 - gap
    if d0 <= tol * gap or q <= 0.0:
        return 1
    return max(1, math.ceil(math.log(tol * gap / d0) / math.log(q)))


def resolvent_point(
    T: Operator,
    G: Operator,
    lam: float,
    tol: float | None = None,
    start: Point | None = None,
) -> Point:
    """Solve v = (1 - lam) T v + lam G(T v) up to residual tol.

    Raises:
        ResolventDivergenceError: no convergence within resolventCapFactor times
            the a-priori bound, meaning the contraction claim on G is false
    """
    if tol is None:
        tol = float(config.get_setting("iteration", "resolventTolerance", 1e-10))
    if not tol > 0:
        raise SpecValidationError("resolvent tolerance must be positive")
    t_lam = resolvent_operator(T, G, lam)
    tau = G.claimed.lipschitz
    cap_factor = int(config.get_setting("iteration", "resolventCapFactor", 10))

    v = np.zeros(T.dim) if start is None else as_point(start, T.dim)
    tv = t_lam(v)
    d0 = float(np.linalg.norm(tv - v))
    cap = cap_factor * resolvent_step_bound(lam, tau, tol, d0)
    residual = d0
    steps = 0
    while residual > tol:
        if steps >= cap:
            raise ResolventDivergenceError(
                f"resolvent solve for lambda={lam} did not converge in {cap} steps "
                f"(residual {residual:.3e}); the contraction claim on G looks false",
                steps,
                residual,
            )
        v = tv
        tv = t_lam(v)
        residual = float(np.linalg.norm(tv - v))
        steps += 1
    logger.debug("resolvent lambda=%.6g converged in %d steps (residual %.2e)", lam, steps, residual)
    return v


class ResolventPath:
    """Lazily computed, cached resolvent points v_n for the schedule's lambda_n."""

    def __init__(self, T: Operator, G: Operator, schedule: Schedule, tol: float | None = None) -> None:
        self.T = T
        self.G = G
        self.schedule = schedule
        self.tol = tol
        self._cache: dict[int, Point] = {}

    def __getitem__(self, n: int) -> Point:
        if n < 0:
            raise SpecValidationError("resolvent index must be >= 0")
        if n not in self._cache:
            start = None
            if self._cache:
                nearest = min(self._cache, key=lambda k: abs(k - n))
                start = self._cache[nearest]
            self._cache[n] = resolvent_point(self.T, self.G, self.schedule.lambda_at(n), self.tol, start)
        return self._cache[n]

    def __len__(self) -> int:
        return len(self._cache)


def resolvent_path(
    T: Operator,
    G: Operator,
    s: Schedule,
    indices: Sequence[int],
    tol: float | None = None,
) -> list[Point]:
    """v_n for each requested index, warm-started from the previous solve."""
    path = ResolventPath(T, G, s, tol)
    return [path[n] for n in indices]


def resolvent_trajectory(
    T: Operator,
    G: Operator,
    s: Schedule,
    steps: int,
    tol: float | None = None,
) -> Trajectory:
    """v_0..v_steps packed as a Trajectory; residual_log[n] = ||T v_{n+1} - v_{n+1}||."""
    if steps < 0:
        raise SpecValidationError("steps must be >= 0")
    points = np.vstack(resolvent_path(T, G, s, range(steps + 1), tol))
    residuals = np.linalg.norm(np.vstack([T(p) for p in points]) - points, axis=1)
    return Trajectory(points, Scheme.HSDM_SINGLE, s, s.lambdas(steps + 1), residuals[1:])


def uniqueness_check(
    T: Operator,
    G: Operator,
    lam: float,
    tol: float,
    starts: Sequence[Point],
) -> tuple[float, float]:
    """Max pairwise distance of resolvent solves from several starts, and the allowed bound."""
    solutions = [resolvent_point(T, G, lam, tol, s) for s in starts]
    worst = 0.0
    for i, a in enumerate(solutions):
        for b in solutions[i + 1:]:
            worst = max(worst, float(np.linalg.norm(a - b)))
    allowed = 2.0 * tol / (lam * (1.0 - G.claimed.lipschitz))
    return worst, allowed


def asymptotic_residuals(
    traj: Trajectory,
    ops: Sequence[Operator],
    window: Sequence[int],
) -> list[float]:
    """||u_n - T_[n+N] ... T_[n+1] u_n|| for each n in the window.

    Raises:
        TrajectoryTooShortError: a window index lies beyond the trajectory
    """
    operators = _as_ops(ops)
    n_ops = len(operators)
    out: list[float] = []
    for n in window:
        if n < 0 or n >= len(traj):
            raise TrajectoryTooShortError(n + 1, len(traj))
        u = traj[n]
        y = u
        for j in range(1, n_ops + 1):
            y = operators[(n + j - 1) % n_ops](y)
        out.append(float(np.linalg.norm(u - y)))
    return out
