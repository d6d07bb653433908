"""
Step-size schedules and their quantitative moduli.

Built-in schedules are lambda_n = c * (n + 1) ** (-rho) with rational rho in
(0, 1] and scale c in (0, 1]. Moduli that reduce to power comparisons (h,
chi, phi4) are computed exactly with integer roots; the ones that involve
logarithms or exponentials (phi1, phi2, phi3) are evaluated with mpmath at
a precision scaled to the size of their arguments and rounded up.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath
import numpy as np

from config_manager import config
from custom_types import FloatArray
from enums import ModulusKind
from error_handler import BudgetExceededError, NoModulusError, SpecValidationError

logger = logging.getLogger(__name__)

Number = int | float | Fraction | str


def to_fraction(x: Number) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (via its repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise SpecValidationError("booleans are not numbers here")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise SpecValidationError(f"non-finite value {x}")
        return Fraction(repr(x))
    try:
        return Fraction(str(x))
    except (ValueError, ZeroDivisionError) as e:
        raise SpecValidationError(f"cannot read {x!r} as a rational") from e


def iroot(n: int, b: int) -> int:
    """floor(n ** (1/b)) for n >= 0."""
    if n < 0 or b < 1:
        raise SpecValidationError("iroot needs n >= 0 and b >= 1")
    if n < 2 or b == 1:
        return n
    x = 1 << -(-n.bit_length() // b)
    while True:
        y = ((b - 1) * x + n // x ** (b - 1)) // b
        if y >= x:
            break
        x = y
    while x ** b > n:
        x -= 1
    while (x + 1) ** b <= n:
        x += 1
    return x


def ceil_root(r: Fraction | int, b: int) -> int:
    """Least natural m with m ** b >= r."""
    if r <= 0:
        return 0
    target = math.ceil(r)
    m = iroot(target, b)
    return m if m ** b >= target else m + 1


def _mpf(x: Fraction | int) -> mpmath.mpf:
    fx = to_fraction(x)
    return mpmath.mpf(fx.numerator) / fx.denominator


def _digits(*values: Fraction | int) -> int:
    total = 0
    for v in values:
        fv = to_fraction(v)
        total += len(str(abs(fv.numerator))) + len(str(fv.denominator))
    return total


def _ceil_mp(compute: Callable[[], Any], hint_digits: int, what: str) -> int:
    """Ceil of a positive mpmath expression, rounded up safely for huge results.

    Raises:
        BudgetExceededError: the result would exceed ``budgets.magnitudeBits`` bits
    """
    base = int(config.get_setting("numerics", "mpDigits", 50))
    bits_cap = int(config.get_setting("budgets", "magnitudeBits", 1 << 20))
    dps = base + hint_digits
    with mpmath.workdps(dps):
        value = compute()
        if value <= 0:
            return 0
        if mpmath.log(value, 2) > bits_cap:
            raise BudgetExceededError(bits_cap, partial=what)
        if value > mpmath.mpf(10) ** (dps - 10):
            value = value * (1 + mpmath.mpf(10) ** (10 - dps))
        return int(mpmath.ceil(value))


@dataclass(frozen=True, slots=True)
class NoModulus:
    """Marker: the schedule admits no modulus of this kind."""
    kind: str
    reason: str

    def raise_error(self) -> None:
        raise NoModulusError(self.kind, self.reason)


ModulusResult = int | NoModulus


def require(value: ModulusResult) -> int:
    """Unwrap a modulus value, raising NoModulusError on the marker."""
    if isinstance(value, NoModulus):
        value.raise_error()
    assert isinstance(value, int)
    return value


@dataclass(frozen=True)
class Schedule:
    """lambda_n = scale * (n + 1) ** (-rho).

    Attributes:
        rho: exponent in (0, 1], held exactly
        scale: c in (0, 1], held exactly
        n_period: N, the family period used by phi4
    """
    rho: Fraction
    scale: Fraction = Fraction(1)
    n_period: int = 1

    def __post_init__(self) -> None:
        rho = to_fraction(self.rho)
        scale = to_fraction(self.scale)
        if not 0 < rho <= 1:
            raise SpecValidationError(f"schedule exponent must lie in (0, 1], got {rho}")
        if not 0 < scale <= 1:
            raise SpecValidationError(f"schedule scale must lie in (0, 1], got {scale}")
        if self.n_period < 1:
            raise SpecValidationError("schedule period N must be >= 1")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def power(cls, rho: Number, n_period: int = 1) -> Schedule:
        return cls(to_fraction(rho), Fraction(1), n_period)

    @classmethod
    def scaled_power(cls, rho: Number, scale: Number, n_period: int = 1) -> Schedule:
        return cls(to_fraction(rho), to_fraction(scale), n_period)

    @property
    def kind(self) -> str:
        return "power" if self.scale == 1 else "scaled_power"

    def lambda_at(self, n: int) -> float:
        if n < 0:
            raise SpecValidationError("schedule index must be >= 0")
        return float(self.scale) * float(n + 1) ** (-float(self.rho))

    def lambdas(self, count: int) -> FloatArray:
        """lambda_0 .. lambda_{count-1}."""
        idx = np.arange(1, count + 1, dtype=np.float64)
        return float(self.scale) * idx ** (-float(self.rho))

    def describe(self) -> str:
        if self.scale == 1:
            return f"(n+1)^-{self.rho}"
        return f"{self.scale}*(n+1)^-{self.rho}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "rho": str(self.rho),
            "scale": str(self.scale),
            "n_period": self.n_period,
        }


def lambda_at(s: Schedule, n: int) -> float:
    return s.lambda_at(n)


@dataclass(frozen=True)
class ModulusBundle:
    """Closed-form moduli h, chi, phi1..phi4 of a power schedule.

    ``tau`` is the contraction factor entering phi3; it is stored exactly.
    """
    schedule: Schedule
    tau: Fraction | None = None
    _cache: dict[tuple[Any, ...], ModulusResult] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.tau is not None:
            tau = to_fraction(self.tau)
            if not 0 <= tau < 1:
                raise SpecValidationError(f"tau must lie in [0, 1), got {tau}")
            object.__setattr__(self, "tau", tau)

    @property
    def _a(self) -> int:
        return self.schedule.rho.numerator

    @property
    def _b(self) -> int:
        return self.schedule.rho.denominator

    def h(self, n: int) -> int:
        """ceil((n+1)^rho / c), so lambda_n >= 1/h(n)."""
        c = self.schedule.scale
        return max(1, ceil_root(Fraction((n + 1) ** self._a) / c ** self._b, self._b))

    h_exact = h

    def chi(self, k: int) -> int:
        """Least index from which lambda_i <= 1/(k+1)."""
        c = self.schedule.scale
        return max(0, ceil_root((c * (k + 1)) ** self._b, self._a) - 1)

    def phi1(self, k: int) -> int:
        """Sum_{i=1}^{m} lambda_i >= k for m >= phi1(k), via the integral from 2 to m+2."""
        if k <= 0:
            return 0
        key = ("phi1", k)
        if key in self._cache:
            return self._cache[key]  # type: ignore[return-value]
        rho, c = self.schedule.rho, self.schedule.scale

        def compute() -> Any:
            if rho == 1:
                return 2 * mpmath.exp(_mpf(Fraction(k) / c)) - 2
            e = 1 - _mpf(rho)
            return (_mpf(Fraction(k) * (1 - rho) / c) + mpmath.power(2, e)) ** (1 / e) - 2

        value = _ceil_mp(compute, _digits(k, c), f"phi1({k})")
        self._cache[key] = value
        return value

    def phi2(self, eps: Number) -> ModulusResult:
        """|lambda_n - lambda_{n+1}| / lambda_{n+1}^2 <= eps for n >= phi2(eps); rho < 1 only."""
        rho, c = self.schedule.rho, self.schedule.scale
        if rho == 1:
            return NoModulus(
                ModulusKind.PHI2,
                "lambda_n = c/(n+1) has (lambda_n - lambda_{n+1})/lambda_{n+1}^2 -> 1/c, "
                "so the relative-difference condition fails for eps < 1/c",
            )
        e = to_fraction(eps)
        if e <= 0:
            raise SpecValidationError("phi2 needs eps > 0")

        def compute() -> Any:
            r = _mpf(rho)
            return (r * mpmath.power(4, r) / (_mpf(c) * _mpf(e))) ** (1 / (1 - r)) - 1

        return _ceil_mp(compute, _digits(e, c), f"phi2({e})")

    def phi3(self, eps: Number, n: int) -> int:
        """prod_{i=n}^{m} (1 - lambda_i (1 - tau)) <= eps for all m >= phi3(eps, n)."""
        if self.tau is None:
            raise SpecValidationError("phi3 needs the contraction factor tau")
        e = to_fraction(eps)
        if e <= 0:
            raise SpecValidationError("phi3 needs eps > 0")
        if n < 0:
            raise SpecValidationError("phi3 needs n >= 0")
        if e >= 1:
            return n
        key = ("phi3", e, n)
        if key in self._cache:
            return self._cache[key]  # type: ignore[return-value]
        rho, c, tau = self.schedule.rho, self.schedule.scale, self.tau

        def compute() -> Any:
            big_l = mpmath.log(1 / _mpf(e)) / _mpf(1 - tau)
            if rho == 1:
                return (n + 1) * mpmath.exp(big_l / _mpf(c)) - 2
            r = _mpf(rho)
            return ((1 - r) * big_l / _mpf(c) + mpmath.power(n + 1, 1 - r)) ** (1 / (1 - r)) - 2

        value = max(n, _ceil_mp(compute, _digits(e, n, c, tau), f"phi3({e}, {n})"))
        self._cache[key] = value
        return value

    def phi3_mono(self, eps: Number, n: int) -> int:
        """max(n, max_{i<=n} phi3(eps, i)); the closed form is nondecreasing in n."""
        return max(n, self.phi3(eps, n))

    def phi4(self, eps: Number) -> int:
        """Sum_{i>=m} |lambda_{i+N} - lambda_i| <= N lambda_m <= eps for m >= phi4(eps)."""
        e = to_fraction(eps)
        if e <= 0:
            raise SpecValidationError("phi4 needs eps > 0")
        big_n = self.schedule.n_period
        c = self.schedule.scale
        return max(0, ceil_root((big_n * c / e) ** self._b, self._a) - 1)

    def get(self, kind: ModulusKind | str, *args: Any) -> ModulusResult:
        kind = ModulusKind(kind)
        dispatch: dict[ModulusKind, Callable[..., ModulusResult]] = {
            ModulusKind.H: self.h,
            ModulusKind.CHI: self.chi,
            ModulusKind.PHI1: self.phi1,
            ModulusKind.PHI2: self.phi2,
            ModulusKind.PHI3: self.phi3,
            ModulusKind.PHI3_MONO: self.phi3_mono,
            ModulusKind.PHI4: self.phi4,
        }
        return dispatch[kind](*args)


def modulus(
    s: Schedule,
    kind: ModulusKind | str,
    *args: Any,
    tau: Number | None = None,
) -> ModulusResult:
    """Analytic modulus of the given kind, or the NoModulus marker."""
    bundle = ModulusBundle(s, None if tau is None else to_fraction(tau))
    return bundle.get(kind, *args)


@dataclass(frozen=True, slots=True)
class ModulusCheck:
    """Outcome of an exhaustive check of a modulus up to a cap.

    ``exhaustive`` is False when the modulus value exceeds the cap, so no
    index in range exercised the defining inequality.
    """
    kind: str
    args: tuple[Any, ...]
    value: int | None
    cap: int
    verified: bool
    counterexample: int | None = None
    exhaustive: bool = True


def _relative(a: float, b: float) -> bool:
    """a <= b up to 1e-12 relative slack."""
    return a <= b * (1.0 + 1e-12) + 1e-15


def verify_modulus(
    s: Schedule,
    kind: ModulusKind | str,
    args: Sequence[Any],
    cap: int,
    claimed: int | Callable[[int], int] | None = None,
    tau: Number | None = None,
) -> ModulusCheck:
    """Exhaustively check the defining inequality of a modulus for indices <= cap.

    Args:
        s: schedule under test
        kind: modulus kind
        args: the modulus arguments (k, eps, or (eps, n) for phi3)
        cap: largest index examined
        claimed: a value (or for h, a function) to check instead of the closed form
        tau: contraction factor for phi3

    Returns:
        ModulusCheck with the first violating index if any
    """
    if cap < 1:
        raise SpecValidationError("cap must be >= 1")
    kind = ModulusKind(kind)
    args = tuple(args)
    bundle = ModulusBundle(s, None if tau is None else to_fraction(tau))
    lam = s.lambdas(cap + s.n_period + 2)

    if kind is ModulusKind.H:
        h_fn: Callable[[int], int] = claimed if callable(claimed) else bundle.h
        for n in range(cap + 1):
            if lam[n] * h_fn(n) < 1.0 - 1e-12:
                return ModulusCheck(kind, args, None, cap, False, n)
        return ModulusCheck(kind, args, None, cap, True)

    if claimed is not None and not callable(claimed):
        value: ModulusResult = int(claimed)
    else:
        value = bundle.get(kind, *args)
    if isinstance(value, NoModulus):
        return ModulusCheck(kind, args, None, cap, False, None, False)

    if kind is ModulusKind.CHI:
        (k,) = args
        bound = 1.0 / (k + 1)
        for i in range(value, cap + 1):
            if not _relative(lam[i], bound):
                return ModulusCheck(kind, args, value, cap, False, i)
        return ModulusCheck(kind, args, value, cap, True, exhaustive=value <= cap)

    if kind is ModulusKind.PHI1:
        (k,) = args
        if value > cap:
            return ModulusCheck(kind, args, value, cap, True, exhaustive=False)
        partial = float(np.sum(lam[1:value + 1]))
        if partial < k * (1.0 - 1e-12):
            return ModulusCheck(kind, args, value, cap, False, value)
        return ModulusCheck(kind, args, value, cap, True)

    if kind is ModulusKind.PHI2:
        (eps,) = args
        e = float(to_fraction(eps))
        for n in range(value, cap + 1):
            ratio = abs(lam[n] - lam[n + 1]) / lam[n + 1] ** 2
            if not _relative(ratio, e):
                return ModulusCheck(kind, args, value, cap, False, n)
        return ModulusCheck(kind, args, value, cap, True, exhaustive=value <= cap)

    if kind in (ModulusKind.PHI3, ModulusKind.PHI3_MONO):
        eps, n = args
        if bundle.tau is None:
            raise SpecValidationError("phi3 verification needs tau")
        if value < n:
            return ModulusCheck(kind, args, value, cap, False, n)
        e = float(to_fraction(eps))
        factor = 1.0 - float(bundle.tau)
        product = 1.0
        for m in range(n, cap + 1):
            product *= 1.0 - lam[m] * factor
            if m >= value and product > e + 1e-12:
                return ModulusCheck(kind, args, value, cap, False, m)
        return ModulusCheck(kind, args, value, cap, True, exhaustive=value <= cap)

    if kind is ModulusKind.PHI4:
        (eps,) = args
        e = float(to_fraction(eps))
        big_n = s.n_period
        if value > cap:
            return ModulusCheck(kind, args, value, cap, True, exhaustive=False)
        head = float(np.sum(np.abs(lam[value + big_n:cap + big_n + 1] - lam[value:cap + 1])))
        tail = float(np.sum(lam[cap + 1:cap + big_n + 1]))
        if head + tail > e + 1e-12:
            return ModulusCheck(kind, args, value, cap, False, value)
        return ModulusCheck(kind, args, value, cap, True)

    raise SpecValidationError(f"unsupported modulus kind {kind}")


def weighted_tail_sum(lambdas: Sequence[float], m: int, n: int) -> float:
    """Sum_{i=m}^{n} lambda_i * prod_{j=i+1}^{n} (1 - lambda_j)."""
    if not 0 <= m <= n < len(lambdas):
        raise SpecValidationError("weighted tail sum needs 0 <= m <= n < len(lambdas)")
    total = 0.0
    tail_product = 1.0
    for i in range(n, m - 1, -1):
        total += lambdas[i] * tail_product
        tail_product *= 1.0 - lambdas[i]
    return total
