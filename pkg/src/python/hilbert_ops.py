"""
Finite-dimensional Hilbert space model and the operator algebra.

Points are 1-D float64 arrays. Operators are immutable dataclasses that
evaluate a closed-form map, carry a claimed Lipschitz class (nonexpansive
or contraction with factor tau) and know how to produce a point of their
fixed-point set. Strongly monotone maps, the contraction G = I - mu F built
from them, and the condition moduli used for cyclic families also live here.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import linalg

from config_manager import config
from custom_types import FloatArray, ModulusFn, Point
from enums import ClassKind
from error_handler import SpecValidationError

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# Points
# ----------------------------------------------------------------------------

def as_point(coords: Any, dim: int | None = None) -> Point:
    """Validate and convert coordinates into a Point.

    Args:
        coords: Sequence or array of reals
        dim: Expected dimension, if fixed by the instance

    Returns:
        1-D float64 array

    Raises:
        SpecValidationError: empty, multi-dimensional, non-finite or wrong dimension
    """
    try:
        arr = np.array(coords, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise SpecValidationError(f"cannot interpret {coords!r} as a point: {e}") from e
    if arr.ndim != 1 or arr.size < 1:
        raise SpecValidationError(f"point must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SpecValidationError("point has non-finite coordinates")
    if dim is not None and arr.size != dim:
        raise SpecValidationError(f"dimension mismatch: expected {dim}, got {arr.size}")
    return arr


def _check_same_dim(x: Point, y: Point) -> None:
    if np.shape(x) != np.shape(y):
        raise SpecValidationError(
            f"dimension mismatch: {np.shape(x)} vs {np.shape(y)}"
        )


def inner(x: Point, y: Point) -> float:
    """Standard inner product."""
    _check_same_dim(x, y)
    return float(np.dot(x, y))


def norm(x: Point) -> float:
    return float(np.linalg.norm(x))


def distance(x: Point, y: Point) -> float:
    _check_same_dim(x, y)
    return float(np.linalg.norm(x - y))


# ----------------------------------------------------------------------------
# Operator classes
# ----------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ClaimedClass:
    """Claimed Lipschitz class: nonexpansive (L = 1) or contraction (L = tau < 1)."""
    kind: ClassKind
    tau: float = 1.0

    def __post_init__(self) -> None:
        if self.kind is ClassKind.CONTRACTION:
            if not 0.0 <= self.tau < 1.0:
                raise SpecValidationError(f"contraction factor must lie in [0, 1), got {self.tau}")
        elif self.tau != 1.0:
            raise SpecValidationError("nonexpansive class carries no contraction factor")

    @classmethod
    def nonexpansive(cls) -> ClaimedClass:
        return cls(ClassKind.NONEXPANSIVE)

    @classmethod
    def contraction(cls, tau: float) -> ClaimedClass:
        return cls(ClassKind.CONTRACTION, float(tau))

    @classmethod
    def from_lipschitz(cls, lipschitz: float) -> ClaimedClass:
        """Smallest class consistent with a Lipschitz constant."""
        slack = config.slack("lipschitzSlack")
        if lipschitz < 1.0:
            return cls.contraction(max(lipschitz, 0.0))
        if lipschitz <= 1.0 + slack:
            return cls.nonexpansive()
        raise SpecValidationError(
            f"operator is expansive (Lipschitz constant {lipschitz:.6g} > 1)"
        )

    @property
    def lipschitz(self) -> float:
        return self.tau

    @property
    def is_contraction(self) -> bool:
        return self.kind is ClassKind.CONTRACTION

    def describe(self) -> str:
        if self.is_contraction:
            return f"contraction({self.tau:.12g})"
        return "nonexpansive"


class Operator(ABC):
    """Base class for operator trees.

    Subclasses implement ``_apply`` on validated inputs; ``__call__`` checks
    the dimension first.
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension of the space the operator acts on."""

    @property
    @abstractmethod
    def claimed(self) -> ClaimedClass:
        """Claimed Lipschitz class."""

    @abstractmethod
    def _apply(self, x: Point) -> Point:
        """Evaluate on a point of the right dimension."""

    @property
    def witness(self) -> Point | None:
        """Known fixed point, if the operator was given one."""
        return None

    def __call__(self, x: Point) -> Point:
        if np.ndim(x) != 1 or np.size(x) != self.dim:
            raise SpecValidationError(
                f"dimension mismatch: operator acts on R^{self.dim}, got shape {np.shape(x)}"
            )
        return self._apply(np.asarray(x, dtype=np.float64))

    def to_fixed_set(self, x: Point) -> Point:
        """Return a point of fix(op) associated with x.

        Projections return the nearest point. The generic fallback runs the
        averaged iteration y <- (y + op(y)) / 2 from x (plain Picard iteration
        for contractions) until the residual drops below ``fixedSetTolerance``.
        """
        tol = config.slack("fixedSetTolerance")
        max_steps = int(config.get_setting("iteration", "fixedSetMaxSteps", 100000))
        witness_tol = config.slack("witnessTolerance")
        y = np.array(x, dtype=np.float64)
        contraction = self.claimed.is_contraction
        residual = math.inf
        for step in range(max_steps):
            ty = self(y)
            residual = float(np.linalg.norm(ty - y))
            if residual <= tol:
                logger.debug("fixed-set iteration converged after %d steps", step)
                return ty if contraction else y
            y = ty if contraction else 0.5 * (y + ty)
        if residual <= witness_tol:
            return y
        raise SpecValidationError(
            f"no fixed point reached from the given start (residual {residual:.3g}); "
            "fix(T) may be empty"
        )


def _validated_witness(op: Operator, witness: Any) -> Point | None:
    if witness is None:
        return None
    w = as_point(witness, op.dim)
    residual = float(np.linalg.norm(op(w) - w))
    if residual > config.slack("witnessTolerance"):
        raise SpecValidationError(
            f"fixed-point witness has residual {residual:.3g} > witness tolerance"
        )
    return w


@dataclass(frozen=True, eq=False)
class ProjectBall(Operator):
    """Metric projection onto the closed ball B(center, radius)."""
    center: FloatArray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise SpecValidationError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return int(self.center.size)

    @property
    def claimed(self) -> ClaimedClass:
        return ClaimedClass.nonexpansive()

    def _apply(self, x: Point) -> Point:
        diff = x - self.center
        r = float(np.linalg.norm(diff))
        if r <= self.radius:
            return x.copy()
        return self.center + diff * (self.radius / r)

    def to_fixed_set(self, x: Point) -> Point:
        return self(x)

    def contains(self, x: Point, slack: float = 0.0) -> bool:
        return float(np.linalg.norm(x - self.center)) <= self.radius + slack


@dataclass(frozen=True, eq=False)
class ProjectBox(Operator):
    """Projection onto the box [lo, hi] (coordinate-wise clip)."""
    lo: FloatArray
    hi: FloatArray

    def __post_init__(self) -> None:
        lo = as_point(self.lo)
        hi = as_point(self.hi, lo.size)
        if np.any(lo > hi):
            raise SpecValidationError("box has lo > hi in some coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return int(self.lo.size)

    @property
    def claimed(self) -> ClaimedClass:
        return ClaimedClass.nonexpansive()

    def _apply(self, x: Point) -> Point:
        return np.clip(x, self.lo, self.hi)

    def to_fixed_set(self, x: Point) -> Point:
        return self(x)

    def contains(self, x: Point, slack: float = 0.0) -> bool:
        return bool(np.all(x >= self.lo - slack) and np.all(x <= self.hi + slack))


@dataclass(frozen=True, eq=False)
class ProjectHalfspace(Operator):
    """Projection onto {x : <normal, x> <= offset}."""
    normal: FloatArray
    offset: float

    def __post_init__(self) -> None:
        n = as_point(self.normal)
        if float(np.dot(n, n)) == 0.0:
            raise SpecValidationError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return int(self.normal.size)

    @property
    def claimed(self) -> ClaimedClass:
        return ClaimedClass.nonexpansive()

    def _apply(self, x: Point) -> Point:
        excess = float(np.dot(self.normal, x)) - self.offset
        if excess <= 0.0:
            return x.copy()
        return x - (excess / float(np.dot(self.normal, self.normal))) * self.normal

    def to_fixed_set(self, x: Point) -> Point:
        return self(x)

    def contains(self, x: Point, slack: float = 0.0) -> bool:
        return float(np.dot(self.normal, x)) <= self.offset + slack


@dataclass(frozen=True, eq=False)
class ProjectAffine(Operator):
    """Projection onto shift + span(basis rows).

    The basis is orthonormalized once with Gram-Schmidt; rows whose residual
    norm falls below ``gramSchmidtPivot`` are dropped as dependent.
    """
    basis: FloatArray
    shift: FloatArray
    _q: FloatArray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        shift = as_point(self.shift)
        basis = np.atleast_2d(np.array(self.basis, dtype=np.float64))
        if basis.size == 0:
            basis = np.zeros((0, shift.size))
        if basis.ndim != 2 or basis.shape[1] != shift.size:
            raise SpecValidationError(
                f"affine basis shape {basis.shape} does not match dimension {shift.size}"
            )
        if not np.all(np.isfinite(basis)):
            raise SpecValidationError("affine basis has non-finite entries")
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_q", gram_schmidt(basis))

    @property
    def dim(self) -> int:
        return int(self.shift.size)

    @property
    def claimed(self) -> ClaimedClass:
        return ClaimedClass.nonexpansive()

    @property
    def rank(self) -> int:
        return int(self._q.shape[0])

    def _apply(self, x: Point) -> Point:
        y = x - self.shift
        return self.shift + self._q.T @ (self._q @ y)

    def to_fixed_set(self, x: Point) -> Point:
        return self(x)


def gram_schmidt(rows: FloatArray, pivot: float | None = None) -> FloatArray:
    """Orthonormalize the rows of a matrix, dropping near-dependent rows."""
    if pivot is None:
        pivot = config.slack("gramSchmidtPivot")
    kept: list[FloatArray] = []
    for row in rows:
        v = np.array(row, dtype=np.float64)
        for q in kept:
            v = v - np.dot(q, v) * q
        nv = float(np.linalg.norm(v))
        if nv > pivot:
            kept.append(v / nv)
    if not kept:
        return np.zeros((0, rows.shape[1]))
    return np.vstack(kept)


@dataclass(frozen=True, eq=False)
class Compose(Operator):
    """Composition ops[0] o ops[1] o ... o ops[-1]; the last operator acts first."""
    ops: tuple[Operator, ...]

    def __post_init__(self) -> None:
        ops = tuple(self.ops)
        if not ops:
            raise SpecValidationError("malformed operator tree: empty composition")
        dims = {op.dim for op in ops}
        if len(dims) != 1:
            raise SpecValidationError(f"composition mixes dimensions {sorted(dims)}")
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops[0].dim

    @property
    def claimed(self) -> ClaimedClass:
        lip = 1.0
        for op in self.ops:
            lip *= op.claimed.lipschitz
        return ClaimedClass.from_lipschitz(lip)

    def _apply(self, x: Point) -> Point:
        y = x
        for op in reversed(self.ops):
            y = op._apply(y)
        return y


@dataclass(frozen=True, eq=False)
class ConvexCombine(Operator):
    """x -> weight * left(x) + (1 - weight) * right(x)."""
    weight: float
    left: Operator
    right: Operator

    def __post_init__(self) -> None:
        if not 0.0 <= self.weight <= 1.0:
            raise SpecValidationError(f"convex weight must lie in [0, 1], got {self.weight}")
        if self.left.dim != self.right.dim:
            raise SpecValidationError("convex combination of operators of different dimension")

    @property
    def dim(self) -> int:
        return self.left.dim

    @property
    def claimed(self) -> ClaimedClass:
        lip = self.weight * self.left.claimed.lipschitz + (1.0 - self.weight) * self.right.claimed.lipschitz
        return ClaimedClass.from_lipschitz(lip)

    def _apply(self, x: Point) -> Point:
        return self.weight * self.left._apply(x) + (1.0 - self.weight) * self.right._apply(x)


@dataclass(frozen=True, eq=False)
class AffineMap(Operator):
    """x -> matrix @ x + shift.

    Without an explicit claim the class is derived from the spectral norm of
    the matrix; expansive maps are rejected.
    """
    matrix: FloatArray
    shift: FloatArray
    claim: ClaimedClass | None = None
    fixed_point: FloatArray | None = None

    def __post_init__(self) -> None:
        shift = as_point(self.shift)
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.shape != (shift.size, shift.size):
            raise SpecValidationError(
                f"affine map matrix shape {matrix.shape} does not match dimension {shift.size}"
            )
        if not np.all(np.isfinite(matrix)):
            raise SpecValidationError("affine map has non-finite entries")
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "matrix", matrix)
        if self.claim is None:
            lip = float(linalg.svdvals(matrix)[0])
            object.__setattr__(self, "claim", ClaimedClass.from_lipschitz(lip))
        object.__setattr__(self, "fixed_point", _validated_witness(self, self.fixed_point))

    @property
    def dim(self) -> int:
        return int(self.shift.size)

    @property
    def claimed(self) -> ClaimedClass:
        assert self.claim is not None
        return self.claim

    @property
    def witness(self) -> Point | None:
        return self.fixed_point

    def _apply(self, x: Point) -> Point:
        return self.matrix @ x + self.shift

    def to_fixed_set(self, x: Point) -> Point:
        """Nearest solution of (I - A) y = shift, via the pseudo-inverse."""
        system = np.eye(self.dim) - self.matrix
        y = x - linalg.pinv(system) @ (system @ x - self.shift)
        if float(np.linalg.norm(self(y) - y)) > config.slack("witnessTolerance"):
            raise SpecValidationError("affine map has no fixed point")
        return y


@dataclass(frozen=True, eq=False)
class ConstantMap(Operator):
    """x -> point; contraction with factor 0."""
    point: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "point", as_point(self.point))

    @property
    def dim(self) -> int:
        return int(self.point.size)

    @property
    def claimed(self) -> ClaimedClass:
        return ClaimedClass.contraction(0.0)

    @property
    def witness(self) -> Point | None:
        return self.point

    def _apply(self, x: Point) -> Point:
        return self.point.copy()

    def to_fixed_set(self, x: Point) -> Point:
        return self.point.copy()


def identity(dim: int) -> AffineMap:
    return AffineMap(np.eye(dim), np.zeros(dim), ClaimedClass.nonexpansive())


def apply_operator(op: Operator, x: Point) -> Point:
    """Evaluate an operator tree at x."""
    return op(as_point(x))


def fixed_point_residual(op: Operator, x: Point) -> float:
    """||op(x) - x||."""
    x = as_point(x)
    return float(np.linalg.norm(op(x) - x))


@dataclass(frozen=True, slots=True)
class LipschitzAudit:
    """Result of sample-verifying an operator's claimed class."""
    claimed: float
    worst_ratio: float
    witness_residual: float | None
    samples: int
    passed: bool


def _sample_pairs(dim: int, samples: int, seed: int, scale: float) -> tuple[FloatArray, FloatArray]:
    rng = np.random.default_rng(seed)
    xs = rng.normal(scale=scale, size=(samples, dim))
    ys = xs + rng.normal(scale=scale, size=(samples, dim)) * rng.uniform(0.0, 1.0, size=(samples, 1))
    return xs, ys


def verify_operator(
    op: Operator,
    samples: int | None = None,
    seed: int | None = None,
    scale: float = 2.0,
) -> LipschitzAudit:
    """Sample-verify ||op(x) - op(y)|| <= L ||x - y|| (1 + lipschitzSlack).

    Also checks the fixed-point witness, if the operator carries one.
    """
    samples = samples or int(config.get_setting("verify", "samples", 1000))
    seed = config.get_setting("verify", "seed", 0) if seed is None else seed
    slack = config.slack("lipschitzSlack")
    lip = op.claimed.lipschitz
    xs, ys = _sample_pairs(op.dim, samples, seed, scale)
    worst = 0.0
    passed = True
    for x, y in zip(xs, ys):
        gap = float(np.linalg.norm(x - y))
        if gap == 0.0:
            continue
        image_gap = float(np.linalg.norm(op(x) - op(y)))
        worst = max(worst, image_gap / gap)
        if image_gap > lip * gap * (1.0 + slack) + 1e-15:
            passed = False
    w = op.witness
    witness_residual = None
    if w is not None:
        witness_residual = fixed_point_residual(op, w)
        passed = passed and witness_residual <= config.slack("witnessTolerance")
    if not passed:
        logger.warning("claimed class %s violated: worst ratio %.6g", op.claimed.describe(), worst)
    return LipschitzAudit(lip, worst, witness_residual, samples, passed)


# ----------------------------------------------------------------------------
# Monotone maps and the derived contraction
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MonotoneOpSpec:
    """Affine map F(x) = matrix @ x + shift that is kappa-Lipschitz and eta-strongly monotone."""
    matrix: FloatArray
    shift: FloatArray
    kappa: float
    eta: float

    def __post_init__(self) -> None:
        shift = as_point(self.shift)
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.shape != (shift.size, shift.size):
            raise SpecValidationError(
                f"monotone map matrix shape {matrix.shape} does not match dimension {shift.size}"
            )
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "matrix", matrix)
        if not self.kappa > 0 or not self.eta > 0:
            raise SpecValidationError("kappa and eta must be positive")
        if self.eta > self.kappa * (1.0 + 1e-12):
            raise SpecValidationError(
                f"eta = {self.eta} exceeds kappa = {self.kappa} (impossible by Cauchy-Schwarz)"
            )

    @classmethod
    def affine(
        cls,
        matrix: Any,
        shift: Any,
        kappa: float | None = None,
        eta: float | None = None,
    ) -> MonotoneOpSpec:
        """Build from an affine map, deriving missing constants from the spectrum."""
        a = np.array(matrix, dtype=np.float64)
        if kappa is None:
            kappa = float(linalg.svdvals(a)[0])
        if eta is None:
            eta = float(linalg.eigvalsh(0.5 * (a + a.T))[0])
        return cls(a, np.asarray(shift, dtype=np.float64), kappa, eta)

    @classmethod
    def quadratic(cls, q: Any, c: Any) -> MonotoneOpSpec:
        """Gradient of x -> x.Qx/2 - c.x for symmetric positive definite Q."""
        qm = np.array(q, dtype=np.float64)
        if not np.allclose(qm, qm.T):
            raise SpecValidationError("quadratic form must be symmetric")
        eig = linalg.eigvalsh(qm)
        if eig[0] <= 0:
            raise SpecValidationError("quadratic form must be positive definite")
        return cls(qm, -np.asarray(c, dtype=np.float64), float(eig[-1]), float(eig[0]))

    @property
    def dim(self) -> int:
        return int(self.shift.size)

    def __call__(self, x: Point) -> Point:
        if np.size(x) != self.dim:
            raise SpecValidationError(f"dimension mismatch: expected {self.dim}, got {np.size(x)}")
        return self.matrix @ x + self.shift

    def zero(self) -> Point:
        """Unique zero of F."""
        return linalg.solve(self.matrix, -self.shift)

    def mu_upper(self) -> float:
        return 2.0 * self.eta / self.kappa ** 2


def verify_monotone(F: MonotoneOpSpec, samples: int | None = None, seed: int | None = None) -> bool:
    """Sample-verify strong monotonicity and the Lipschitz bound of F."""
    samples = samples or int(config.get_setting("verify", "samples", 1000))
    seed = config.get_setting("verify", "seed", 0) if seed is None else seed
    slack = config.slack("monotoneSlack")
    xs, ys = _sample_pairs(F.dim, samples, seed, 2.0)
    for x, y in zip(xs, ys):
        diff = x - y
        gap2 = float(np.dot(diff, diff))
        fd = F(x) - F(y)
        if float(np.dot(fd, diff)) < F.eta * gap2 * (1.0 - slack):
            return False
        if float(np.linalg.norm(fd)) > F.kappa * math.sqrt(gap2) * (1.0 + slack):
            return False
    return True


def contraction_factor(kappa: float, eta: float, mu: float) -> float:
    """tau = sqrt(1 - mu (2 eta - mu kappa^2))."""
    return math.sqrt(max(0.0, 1.0 - mu * (2.0 * eta - mu * kappa ** 2)))


def contraction_from_monotone(F: MonotoneOpSpec, mu: float) -> AffineMap:
    """G = I - mu F as a contraction with factor tau.

    Raises:
        SpecValidationError: mu outside (0, 2 eta / kappa^2)
    """
    upper = F.mu_upper()
    if not 0.0 < mu < upper:
        raise SpecValidationError(
            f"mu = {mu} outside (0, 2*eta/kappa^2) = (0, {upper:.12g}); G is not a contraction"
        )
    tau = contraction_factor(F.kappa, F.eta, mu)
    logger.debug("contraction from monotone map: mu=%g tau=%.12g", mu, tau)
    return AffineMap(
        np.eye(F.dim) - mu * F.matrix,
        -mu * F.shift,
        ClaimedClass.contraction(tau),
        F.zero(),
    )


# ----------------------------------------------------------------------------
# Condition moduli for families
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionModulus:
    """rho_hat(d, eps): small composite residual forces small individual residuals."""
    rho_hat: ModulusFn
    n_ops: int
    name: str = "rho_hat"

    def __post_init__(self) -> None:
        if self.n_ops < 1:
            raise SpecValidationError("condition modulus needs at least one operator")

    def __call__(self, d: int, eps: float) -> float:
        if not eps > 0:
            raise SpecValidationError(f"modulus argument must be positive, got {eps}")
        value = float(self.rho_hat(d, eps))
        if not value > 0:
            raise SpecValidationError(f"{self.name} returned non-positive value {value}")
        return value


def default_projection_sqne(d: int, eps: float) -> float:
    """SQNE modulus of a metric projection, eps^2 / (2d)."""
    return eps * eps / (2.0 * d)


def sqne_chain_modulus(
    omegas: Sequence[ModulusFn],
    alpha: Callable[[float], float],
    n_ops: int,
    d: int,
) -> Callable[[float], float]:
    """Modulus for a composition of N strongly quasi-nonexpansive maps.

    chi_0 = min(alpha(eps/2), eps); chi_{k+1} = min(omega(d, chi_k/2), chi_k/2)
    where omega is the pointwise minimum of the omegas; returns eps -> chi_{N-1}.
    """
    if n_ops < 1:
        raise SpecValidationError("SQNE chain needs N >= 1")
    if not omegas:
        raise SpecValidationError("SQNE chain needs at least one modulus")
    moduli = tuple(omegas)

    def rho(eps: float) -> float:
        if not eps > 0:
            raise SpecValidationError(f"modulus argument must be positive, got {eps}")
        chi = min(alpha(eps / 2.0), eps)
        for _ in range(n_ops - 1):
            half = chi / 2.0
            chi = min(min(om(d, half) for om in moduli), half)
        if not chi > 0:
            raise SpecValidationError(f"SQNE chain produced non-positive value {chi}")
        return chi

    return rho


def sqne_condition_modulus(
    omegas: Sequence[ModulusFn],
    alpha: Callable[[float], float],
    n_ops: int,
) -> ConditionModulus:
    moduli = tuple(omegas)
    return ConditionModulus(
        lambda d, eps: sqne_chain_modulus(moduli, alpha, n_ops, d)(eps),
        n_ops,
        name="sqne_chain",
    )


def bauschke_modulus(rho_hat: ConditionModulus, n_ops: int) -> ConditionModulus:
    """rho(d, eps) = rho_hat(d, eps / (2N + 1)), valid for every cyclic order."""
    if n_ops < 1:
        raise SpecValidationError("bauschke modulus needs N >= 1")
    divisor = 2 * n_ops + 1
    return ConditionModulus(
        lambda d, eps: rho_hat(d, eps / divisor),
        n_ops,
        name=f"{rho_hat.name}/(2N+1)",
    )


def line_pair_modulus(theta: float) -> ConditionModulus:
    """rho_hat for projections onto two lines through a common point at angle theta."""
    s = math.sin(theta)
    if not s > 0:
        raise SpecValidationError("lines must intersect at a nonzero angle")
    return ConditionModulus(lambda d, eps: eps * s / (1.0 + s), 2, name="line_pair")


def cyclic_orders(n_ops: int) -> list[list[int]]:
    """The N cyclic shifts of (0, ..., N-1)."""
    return [[(start + k) % n_ops for k in range(n_ops)] for start in range(n_ops)]


def compose_in_order(ops: Sequence[Operator], order: Sequence[int]) -> Compose:
    """T_{order[-1]} o ... o T_{order[0]}: order[0] acts first."""
    return Compose(tuple(ops[i] for i in reversed(order)))
