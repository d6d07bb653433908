"""
Exact evaluation of the quantitative bounds.

All tower arithmetic is on Python integers; epsilons and thresholds are
Fractions. Function arguments that are themselves natural-number functions
are represented by ``Majorant`` nodes (closed forms, tables, monotonized
and tilde-transformed functions, iterates, pointwise maxima) so that a bound
can be evaluated literally under a budget, or through the closed form
c * n ** e where every node along the chain is a monomial.

A bound that would exceed the application or magnitude budget comes back as
a symbolic ``RateValue`` holding the expression instead of a number.
"""

from __future__ import annotations

import json
import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath

from config_manager import config
from custom_types import ModulusFn, SeqFn
from enums import CertificateStatus, CertifyMode, OmegaReading, TowerReading
from error_handler import BudgetExceededError, CheckFailedError, SpecValidationError
from functional_engine import TowerParameters, tower_parameters
from schedules import ModulusBundle, Number, _ceil_mp, _digits, _mpf, require, to_fraction

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# Budgets and values
# ----------------------------------------------------------------------------

@dataclass
class RateBudget:
    """Counts function applications and caps the bit length of every value."""
    applications: int | None = None
    bits: int | None = None
    used: int = 0

    def __post_init__(self) -> None:
        if self.applications is None:
            self.applications = int(config.get_setting("budgets", "applications", 1_000_000))
        if self.bits is None:
            self.bits = int(config.get_setting("budgets", "magnitudeBits", 1 << 20))

    def charge(self, value: int, what: str = "") -> int:
        assert self.applications is not None and self.bits is not None
        self.used += 1
        if self.used > self.applications:
            raise BudgetExceededError(self.applications, partial=what)
        if value.bit_length() > self.bits:
            raise BudgetExceededError(self.bits, partial=what)
        return value

    def check_bits(self, bits: int, what: str = "") -> None:
        assert self.bits is not None
        if bits > self.bits:
            raise BudgetExceededError(self.bits, partial=what)


def _int_payload(v: int) -> int | str:
    # int -> decimal str conversion is capped by the interpreter; hex is not
    if v.bit_length() <= 12000:
        return v
    return hex(v)


@dataclass(frozen=True)
class RateValue:
    """An exact natural, or a marker: budget exceeded (with expression) or no modulus."""
    value: int | None = None
    expression: str = ""
    no_modulus: str | None = None
    quantities: dict[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def exact(cls, value: int, expression: str = "", **quantities: Any) -> RateValue:
        return cls(value=value, expression=expression, quantities=quantities)

    @classmethod
    def budget_exceeded(cls, expression: str, **quantities: Any) -> RateValue:
        return cls(expression=expression, quantities=quantities)

    @classmethod
    def missing(cls, reason: str, **quantities: Any) -> RateValue:
        return cls(no_modulus=reason, quantities=quantities)

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    @property
    def status(self) -> str:
        if self.value is not None:
            return "exact"
        return "no_modulus" if self.no_modulus is not None else "budget_exceeded"

    def describe(self) -> str:
        if self.value is not None:
            if self.value.bit_length() > 200:
                return f"<{self.value.bit_length()}-bit natural> = {self.expression}"
            return str(self.value)
        if self.no_modulus is not None:
            return f"no modulus: {self.no_modulus}"
        return f"budget exceeded: {self.expression}"

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"status": self.status, "expression": self.expression}
        if self.value is not None:
            out["value"] = _int_payload(self.value)
            out["bits"] = self.value.bit_length()
        if self.no_modulus is not None:
            out["reason"] = self.no_modulus
        if self.quantities:
            out["quantities"] = {k: _jsonable(v) for k, v in self.quantities.items()}
        return out


def _jsonable(v: Any) -> Any:
    if isinstance(v, RateValue):
        return v.to_dict()
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, int):
        return _int_payload(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return v
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return str(v)


# ----------------------------------------------------------------------------
# Majorant functions
# ----------------------------------------------------------------------------

class Majorant(ABC):
    """A function on positive naturals with values >= 1."""

    monotone: bool = False

    @abstractmethod
    def _eval(self, n: int, budget: RateBudget) -> int:
        """Value at n >= 1."""

    @abstractmethod
    def describe(self) -> str:
        """Symbolic form used in reports."""

    def monomial(self) -> tuple[int, int] | None:
        """(c, e) when the function is exactly n -> c * n ** e on n >= 1."""
        return None

    def __call__(self, n: int, budget: RateBudget | None = None) -> int:
        budget = budget if budget is not None else RateBudget()
        return self._eval(max(1, int(n)), budget)

    def __repr__(self) -> str:
        return self.describe()


class Closed(Majorant):
    """Wraps a Python callable; outputs are clamped to >= 1."""

    def __init__(
        self,
        fn: Callable[[int], int],
        label: str,
        monotone: bool = False,
        monomial: tuple[int, int] | None = None,
    ) -> None:
        self.fn = fn
        self.label = label
        self.monotone = monotone or monomial is not None
        self._monomial = monomial

    def _eval(self, n: int, budget: RateBudget) -> int:
        return budget.charge(max(1, int(self.fn(n))), self.label)

    def describe(self) -> str:
        return self.label

    def monomial(self) -> tuple[int, int] | None:
        return self._monomial


def identity_majorant() -> Closed:
    return Closed(lambda n: n, "n", monomial=(1, 1))


def constant_majorant(k: int) -> Closed:
    if k < 1:
        raise SpecValidationError("majorant values must be >= 1")
    return Closed(lambda n: k, str(k), monotone=True, monomial=(k, 0))


def power_majorant(c: int, e: int) -> Closed:
    if c < 1 or e < 0:
        raise SpecValidationError("power majorant needs c >= 1 and e >= 0")
    return Closed(lambda n: c * n ** e, f"{c}*n^{e}", monomial=(c, e))


class Tabulated(Majorant):
    """f(n) = table[n - 1] for n <= len(table), the last entry beyond."""

    def __init__(self, table: Sequence[int]) -> None:
        if not table or any(int(x) < 1 for x in table):
            raise SpecValidationError("a tabulated majorant needs positive entries")
        self.table = [int(x) for x in table]
        self.monotone = all(a <= b for a, b in zip(self.table, self.table[1:]))

    def _eval(self, n: int, budget: RateBudget) -> int:
        return budget.charge(self.table[min(n, len(self.table)) - 1], "table")

    def describe(self) -> str:
        return f"table{self.table[:4]}{'...' if len(self.table) > 4 else ''}"


class Monotonized(Majorant):
    """f^M(n) = max{f(i) : 1 <= i <= n}."""

    monotone = True

    def __init__(self, base: Majorant) -> None:
        self.base = base
        self._prefix: list[int] = []

    def _eval(self, n: int, budget: RateBudget) -> int:
        if self.base.monotone:
            return self.base._eval(n, budget)
        while len(self._prefix) < n:
            i = len(self._prefix) + 1
            value = self.base._eval(i, budget)
            self._prefix.append(max(value, self._prefix[-1]) if self._prefix else value)
        return self._prefix[n - 1]

    def describe(self) -> str:
        return self.base.describe() if self.base.monotone else f"({self.base.describe()})^M"

    def monomial(self) -> tuple[int, int] | None:
        return self.base.monomial()


class Tilde(Majorant):
    """f~(n) = max{f^M(16 d n^2), 16 d n^2}; monotone and >= n."""

    monotone = True

    def __init__(self, base: Majorant, d: int) -> None:
        if d < 1:
            raise SpecValidationError("d must be >= 1")
        self.base = base
        self.d = d
        self.inner = Monotonized(base)
        self._memo: dict[int, int] = {}

    def _eval(self, n: int, budget: RateBudget) -> int:
        if n in self._memo:
            return self._memo[n]
        m = 16 * self.d * n * n
        value = budget.charge(max(self.inner._eval(m, budget), m), "tilde")
        if len(self._memo) < 4096:
            self._memo[n] = value
        return value

    def describe(self) -> str:
        return f"tilde[{self.base.describe()}]"

    def monomial(self) -> tuple[int, int] | None:
        mono = self.base.monomial()
        if mono is None:
            return None
        c, e = mono
        s = 16 * self.d
        if e == 0:
            return (s, 2) if c <= s else None
        if e >= 1 and c >= 1:
            return (c * s ** e, 2 * e)
        return None


class Iterated(Majorant):
    """f^(count): count-fold composition; count may be astronomically large."""

    def __init__(self, base: Majorant, count: int) -> None:
        if count < 0:
            raise SpecValidationError("iteration count must be >= 0")
        self.base = base
        self.count = count
        self.monotone = base.monotone

    def _eval(self, n: int, budget: RateBudget) -> int:
        x = n
        for _ in range(self.count):
            x = self.base._eval(x, budget)
        return x

    def describe(self) -> str:
        return f"({self.base.describe()})^({self.count})"

    def monomial(self) -> tuple[int, int] | None:
        mono = self.base.monomial()
        if mono is None:
            return None
        c, e = mono
        m = self.count
        if m == 0:
            return (1, 1)
        if e == 0:
            return (c, 0)
        if e == 1:
            return (c ** m, 1)
        if m.bit_length() > 12:
            return None
        return (c ** ((e ** m - 1) // (e - 1)), e ** m)


class PointwiseMax(Majorant):
    def __init__(self, *parts: Majorant) -> None:
        if not parts:
            raise SpecValidationError("pointwise max needs at least one function")
        self.parts = parts
        self.monotone = all(p.monotone for p in parts)

    def _eval(self, n: int, budget: RateBudget) -> int:
        return max(p._eval(n, budget) for p in self.parts)

    def describe(self) -> str:
        return "max{" + ", ".join(p.describe() for p in self.parts) + "}"


def build_majorant_chain(f: Majorant, d: int) -> tuple[Majorant, Majorant]:
    """(f^M, f~) for f and confinement bound d."""
    return Monotonized(f), Tilde(f, d)


def iterate_value(
    fn: Majorant,
    count: int,
    start: int,
    budget: RateBudget,
    memoized: bool = False,
) -> int:
    """fn^(count)(start), literally or through the monomial closed form."""
    what = f"({fn.describe()})^({count})({start})"
    if memoized:
        mono = fn.monomial()
        if mono is not None:
            c, e = mono
            if count == 0:
                return start
            if e == 0:
                return c
            if e == 1:
                budget.check_bits(count * c.bit_length() + start.bit_length(), what)
                return c ** count * start
            if c == 1 and start == 1:
                return 1
            # c ** ((e^count - 1) / (e - 1)) * start ** (e^count)
            if count * (e.bit_length() - 1) > 64:
                raise BudgetExceededError(budget.bits or 0, partial=what)
            big_e = e ** count
            bits = (big_e - 1) // (e - 1) * (c.bit_length() - 1) + big_e * (start.bit_length() - 1)
            budget.check_bits(bits, what)
            budget.charge(1, what)
            return c ** ((big_e - 1) // (e - 1)) * start ** big_e
    x = start
    for _ in range(count):
        x = fn._eval(x, budget)
    return x


# ----------------------------------------------------------------------------
# Majorant functionals
# ----------------------------------------------------------------------------

def psi_star(f: Majorant, d: int, i: int, budget: RateBudget | None = None) -> int:
    """psi*_1 = 1, psi*_{i+1} = max{f(16 d psi*_i^2), 16 d psi*_i^2}."""
    budget = budget if budget is not None else RateBudget()
    if i < 1:
        raise SpecValidationError("psi* is indexed from 1")
    k = 1
    for _ in range(i - 1):
        m = 16 * d * k * k
        k = budget.charge(max(f._eval(m, budget), m), "psi*")
    return k


def phi_star(f: Majorant, d: int, n: int, budget: RateBudget | None = None) -> int:
    """max{psi*_i(f) : 1 <= i <= n}."""
    budget = budget if budget is not None else RateBudget()
    best = k = 1
    for _ in range(n - 1):
        m = 16 * d * k * k
        k = budget.charge(max(f._eval(m, budget), m), "phi*")
        best = max(best, k)
    return best


def phi_tilde_star(f: Majorant, d: int, n: int, budget: RateBudget | None = None,
                   memoized: bool = False) -> int:
    """f~^(n)(1)."""
    budget = budget if budget is not None else RateBudget()
    return iterate_value(Tilde(f, d), n, 1, budget, memoized)


def phi_plus(f1: Majorant, f2: Majorant, d: int, n: int, budget: RateBudget | None = None) -> int:
    """phi* of the pointwise maximum, majorizing the pair projection's phi."""
    return phi_star(PointwiseMax(f1, f2), d, n, budget)


# ----------------------------------------------------------------------------
# k-tower
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class TowerShape:
    """n_eps~ and i0 used for a tower, possibly forced by overrides."""
    n_eps_tilde: int
    i0: int
    params: TowerParameters | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"n_eps_tilde": self.n_eps_tilde, "i0": self.i0}
        if self.params is not None:
            out["eps_tilde"] = str(self.params.eps_tilde)
        return out


def tower_shape(
    d: int,
    eps: Number | None,
    tau: Number | None,
    overrides: dict[str, int] | None = None,
) -> TowerShape:
    overrides = overrides or {}
    params = None
    if "n_eps_tilde" not in overrides or "i0" not in overrides:
        if eps is None or tau is None:
            raise SpecValidationError("eps and tau are required unless n_eps_tilde and i0 are forced")
        params = tower_parameters(eps, tau, d)
    n = int(overrides.get("n_eps_tilde", params.n_eps_tilde if params else 0))
    i0 = int(overrides.get("i0", params.i0 if params else 0))
    if n < 1 or i0 < 0:
        raise SpecValidationError("n_eps_tilde must be >= 1 and i0 >= 0")
    return TowerShape(n, i0, params)


def level_function(
    base: Majorant,
    shape: TowerShape,
    i: int,
    reading: TowerReading | str = TowerReading.PROOF,
) -> Iterated:
    """f_i = f~^(n^(i0 - i)) (proof) or f~^(n^i) (printed), built on the tilde of the input."""
    exponent = shape.i0 - i if TowerReading(reading) is TowerReading.PROOF else i
    return Iterated(base, shape.n_eps_tilde ** exponent)


def k_levels(
    f: Majorant,
    d: int,
    shape: TowerShape,
    budget: RateBudget | None = None,
    memoized: bool = False,
    reading: TowerReading | str = TowerReading.PROOF,
) -> list[int]:
    """k_0 = f~_0^(n)(1), then k_i = f~_i^(n)(k_{i-1}) (proof) or f~_{i-1}^(n)(k_{i-1}) (printed).

    Raises:
        BudgetExceededError: a level overflows the application or bit budget
    """
    budget = budget if budget is not None else RateBudget()
    base = Tilde(f, d)
    ks: list[int] = []
    k = 1
    reading = TowerReading(reading)
    for i in range(shape.i0 + 1):
        level = i if reading is TowerReading.PROOF else max(i - 1, 0)
        f_i = level_function(base, shape, level, reading)
        k = iterate_value(Tilde(f_i, d), shape.n_eps_tilde, k, budget, memoized)
        ks.append(k)
        logger.debug("k_%d has %d bits", i, k.bit_length())
    return ks


def k_tower(
    f: Majorant,
    d: int,
    eps: Number | None = None,
    tau: Number | None = None,
    overrides: dict[str, int] | None = None,
    *,
    memoized: bool = False,
    budget: RateBudget | None = None,
    reading: TowerReading | str = TowerReading.PROOF,
) -> RateValue:
    """K(f) = k_{i0} for the tilde chain of f, exactly or as a symbolic marker."""
    shape = tower_shape(d, eps, tau, overrides)
    expression = f"k_{shape.i0}[{f.describe()}; d={d}, n={shape.n_eps_tilde}]"
    try:
        ks = k_levels(f, d, shape, budget, memoized, reading)
    except BudgetExceededError as e:
        logger.info("k-tower %s exceeded its budget (%s)", expression, e)
        return RateValue.budget_exceeded(expression, **shape.to_dict())
    return RateValue.exact(ks[-1], expression, **shape.to_dict())


def chain_domination(
    f: Majorant,
    d: int,
    n_eps_tilde: int,
    i0: int,
    k: int,
    budget: RateBudget | None = None,
) -> list[tuple[int, RateValue, RateValue]]:
    """(i, f^_i(k), f_i(k)) for i = i0 .. 0 where f^ is built recursively.

    f^_{i0} = f~ and f^_i(k) = max{f^_{i+1}, k}^(n)(1); the closed form is
    f_i = f~^(n^(i0 - i)).
    """
    budget = budget if budget is not None else RateBudget()
    base = Tilde(f, d)
    shape = TowerShape(n_eps_tilde, i0)

    def hat(i: int, x: int) -> int:
        if i == i0:
            return base._eval(x, budget)
        y = 1
        for _ in range(n_eps_tilde):
            y = max(hat(i + 1, y), x)
        return y

    out = []
    for i in range(i0, -1, -1):
        try:
            recursive = RateValue.exact(hat(i, k), f"f^_{i}({k})")
        except BudgetExceededError:
            recursive = RateValue.budget_exceeded(f"f^_{i}({k})")
        try:
            closed_fn = level_function(base, shape, i, TowerReading.PROOF)
            closed = RateValue.exact(closed_fn._eval(k, budget), f"f_{i}({k})")
        except BudgetExceededError:
            closed = RateValue.budget_exceeded(f"f_{i}({k})")
        out.append((i, recursive, closed))
    return out


# ----------------------------------------------------------------------------
# Bounds
# ----------------------------------------------------------------------------

class ModuliView:
    """A ModulusBundle with individual moduli replaced, e.g. chi = identity."""

    def __init__(self, bundle: ModulusBundle, **overrides: Callable[..., Any]) -> None:
        self.bundle = bundle
        self.overrides = overrides

    def __getattr__(self, name: str) -> Any:
        overrides = self.__dict__.get("overrides", {})
        if name in overrides:
            return overrides[name]
        return getattr(self.__dict__["bundle"], name)

    @property
    def tau(self) -> Fraction | None:
        return self.bundle.tau


Moduli = ModulusBundle | ModuliView


def g_tilde(g: SeqFn) -> Callable[[int], int]:
    return lambda n: max(n, int(g(n)))


def _monotone_seq(fn: Callable[[int], int], budget: RateBudget) -> Callable[[int], int]:
    """n -> max{fn(i) : i <= n} with a running prefix cache."""
    prefix: list[int] = []

    def m(n: int) -> int:
        while len(prefix) <= n:
            value = budget.charge(max(0, int(fn(len(prefix)))), "monotone")
            prefix.append(max(value, prefix[-1]) if prefix else value)
        return prefix[n]

    return m


def _tau(moduli: Moduli, tau: Number | None) -> Fraction:
    if tau is not None:
        return to_fraction(tau)
    if moduli.tau is None:
        raise SpecValidationError("tau is required")
    return moduli.tau


def _eps(eps: Number) -> Fraction:
    e = to_fraction(eps)
    if not 0 < e <= 1:
        raise SpecValidationError(f"eps must lie in (0, 1], got {e}")
    return e


def xi_single(
    eps: Number,
    g: SeqFn,
    moduli: Moduli,
    d: int,
    tau: Number | None = None,
    overrides: dict[str, int] | None = None,
    *,
    memoized: bool = False,
    budget: RateBudget | None = None,
    tower_reading: TowerReading | str = TowerReading.PROOF,
) -> RateValue:
    """Xi = chi(d * k_{i0}) with f(n) = ceil(6d(1 - tau) h^M(g~^M(chi(dn))) / (eps/2)^2).

    The tower runs at eps_d = (eps/2)^4 / (8 (1 - tau)^2 d^2).
    """
    e = _eps(eps)
    ta = _tau(moduli, tau)
    budget = budget if budget is not None else RateBudget()
    overrides = dict(overrides or {})
    gm = _monotone_seq(g_tilde(g), budget)
    half_sq = (e / 2) ** 2

    def f_fn(n: int) -> int:
        return math.ceil(Fraction(6 * d) * (1 - ta) * moduli.h(gm(moduli.chi(d * n))) / half_sq)

    eps_d = (e / 2) ** 4 / (8 * (1 - ta) ** 2 * d * d)
    quantities: dict[str, Any] = {"eps_d": eps_d, "tau": ta, "d": d}
    expression = f"chi({d}*k_i0[f; eps_d={eps_d}])"

    forced_k = overrides.pop("k", None)
    if forced_k is not None:
        k = int(forced_k)
        quantities["k"] = k
    else:
        f = Closed(f_fn, "ceil(6d(1-tau)h^M(g~^M(chi(dn)))/(eps/2)^2)")
        shape = tower_shape(d, eps_d, ta, overrides)
        quantities.update(shape.to_dict())
        try:
            ks = k_levels(f, d, shape, budget, memoized, tower_reading)
        except BudgetExceededError:
            return RateValue.budget_exceeded(expression, **quantities)
        k = ks[-1]
        quantities["k"] = k
    try:
        value = moduli.chi(d * k)
    except BudgetExceededError:
        return RateValue.budget_exceeded(expression, **quantities)
    return RateValue.exact(int(value), expression, **quantities)


def xi_corollary(
    eps: Number,
    g: SeqFn,
    moduli: Moduli,
    d: int,
    tau: Number | None = None,
    overrides: dict[str, int] | None = None,
    **kwargs: Any,
) -> RateValue:
    """Xi(eps/2, n -> n + g(n)): a bound on n with ||v_i - v_j|| <= eps on [n, n + g(n)]."""
    e = _eps(eps)
    return xi_single(e / 2, lambda n: n + int(g(n)), moduli, d, tau, overrides, **kwargs)


def _ceil_ln(x: Fraction) -> int:
    return _ceil_mp(lambda: mpmath.log(_mpf(x)), _digits(x), f"ceil(ln({x}))")


@dataclass(frozen=True)
class FullBound:
    """Bound with the shift c; delta and the VIP accuracy only for the quantitative mode."""
    bound: RateValue
    c: int
    delta: Fraction | None = None
    eps_prime: RateValue | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"bound": self.bound.to_dict(), "c": _int_payload(self.c)}
        if self.delta is not None:
            out["delta"] = str(self.delta)
        if self.eps_prime is not None:
            out["eps_prime_majorant"] = self.eps_prime.to_dict()
            if self.eps_prime.value is not None and self.eps_prime.value.bit_length() < 12000:
                out["eps_prime"] = f"1/{self.eps_prime.value}"
        return out


def shift_constant(target: Fraction, moduli: Moduli, d: int, tau: Fraction) -> int:
    """c = phi1(ceil((phi2((1 - tau) target / 6d) + ceil(ln(6d / target))) / (1 - tau)))."""
    p2 = require(moduli.phi2((1 - tau) * target / (6 * d)))
    arg = math.ceil((p2 + _ceil_ln(Fraction(6 * d) / target)) / (1 - tau))
    return int(moduli.phi1(arg))


def xi_full(
    eps: Number,
    g: SeqFn,
    moduli: Moduli,
    d: int,
    tau: Number | None = None,
    mode: CertifyMode | str = CertifyMode.FULL,
    overrides: dict[str, int] | None = None,
    *,
    memoized: bool = False,
    budget: RateBudget | None = None,
    tower_reading: TowerReading | str = TowerReading.PROOF,
) -> FullBound:
    """Metastability bound of the plain iteration, with the shift c.

    FULL: Xi(eps/6, g_c) + c with g_c(n) = n + c + g(n + c).
    QUANT: delta = eps / (2d(2 + tau)), Xi(delta/6, g_c) + c, and the majorant
    k' of the tower at delta/6 whose reciprocal is the VIP accuracy eps'.

    Raises:
        NoModulusError: the schedule has no phi2 (e.g. lambda_n = 1/(n+1))
    """
    e = _eps(eps)
    ta = _tau(moduli, tau)
    mode = CertifyMode(mode)
    if mode not in (CertifyMode.FULL, CertifyMode.QUANT):
        raise SpecValidationError(f"xi_full handles full and quant, not {mode}")
    delta = e / (2 * d * (2 + ta)) if mode is CertifyMode.QUANT else None
    target = delta if delta is not None else e
    c = shift_constant(target, moduli, d, ta)

    def g_c(n: int) -> int:
        return n + c + int(g(n + c))

    inner = xi_single(
        target / 6, g_c, moduli, d, ta, overrides,
        memoized=memoized, budget=budget, tower_reading=tower_reading,
    )
    quantities = {**inner.quantities, "c": c}
    if delta is not None:
        quantities["delta"] = delta
    expression = f"Xi({target}/6, g_c) + {c}"
    if inner.value is None:
        bound = RateValue.budget_exceeded(expression, **quantities)
    else:
        bound = RateValue.exact(inner.value + c, expression, **quantities)

    eps_prime = None
    if delta is not None:
        k = inner.quantities.get("k")
        eps_prime = (
            RateValue.exact(k, f"k'_i0 at delta/6 = {delta / 6}")
            if isinstance(k, int)
            else RateValue.budget_exceeded(f"k'_i0 at delta/6 = {delta / 6}")
        )
    return FullBound(bound, c, delta, eps_prime)


def chi_hat(eps: Number, moduli: Moduli, d: int, n_ops: int) -> int:
    """max{phi3(eps/2d, phi4(eps/4d)), chi(ceil(N d / 2 eps))}."""
    e = to_fraction(eps)
    if e <= 0:
        raise SpecValidationError("chi_hat needs eps > 0")
    period = moduli.schedule.n_period
    if period != n_ops:
        raise SpecValidationError(
            f"phi4 is built for a family of {period} operator(s), but N = {n_ops} was requested"
        )
    p4 = int(moduli.phi4(e / (4 * d)))
    p3 = int(moduli.phi3(e / (2 * d), p4))
    tail = int(moduli.chi(math.ceil(Fraction(n_ops * d) / (2 * e))))
    return max(p3, tail)


def asy_rate(
    eps: Number,
    moduli: Moduli,
    d: int,
    n_ops: int,
    rho: ModulusFn | None = None,
) -> int:
    """Index from which the composite residual ||u_n - T_[n+N]...T_[n+1] u_n|| <= eps.

    With a condition modulus rho the result is chi_hat(rho(d, eps/N)), which
    controls the residual of every cyclic composition.
    """
    e = to_fraction(eps)
    if e <= 0:
        raise SpecValidationError("asy_rate needs eps > 0")
    if n_ops < 1:
        raise SpecValidationError("N must be >= 1")
    if rho is not None:
        e = to_fraction(float(rho(d, float(e / n_ops))))
    value = chi_hat(e, moduli, d, n_ops)
    logger.info("chi_hat(%s) = %d (N=%d, d=%d)", e, value, n_ops, d)
    return value


@dataclass(frozen=True)
class OmegaValue:
    value: Fraction
    guarded: bool


def omega_d(
    eps: Number,
    g: SeqFn,
    n0: int,
    moduli: Moduli,
    d: int,
    reading: OmegaReading | str = OmegaReading.PROOF,
) -> OmegaValue:
    """eps^2 / (18 d (g~(phi3(eps^2/3d, n0)) - n0)); a zero denominator is replaced by 1."""
    e = to_fraction(eps)
    if e <= 0:
        raise SpecValidationError("omega needs eps > 0")
    reading = OmegaReading(reading)
    gt = g_tilde(g)
    m = int(moduli.phi3(e * e / (3 * d), n0))
    denominator = gt(m) - n0 if reading is OmegaReading.PROOF else gt(m - n0)
    guarded = denominator <= 0
    if guarded:
        logger.warning("omega_d denominator %d at n0=%d replaced by 1", denominator, n0)
        denominator = 1
    return OmegaValue(e * e / (18 * d * denominator), guarded)


def omega_d_monotone(
    eps: Number,
    g: SeqFn,
    n: int,
    moduli: Moduli,
    d: int,
    reading: OmegaReading | str = OmegaReading.PROOF,
    budget: RateBudget | None = None,
) -> Fraction:
    """max{Omega_d(eps, g, i) : i <= n}."""
    budget = budget if budget is not None else RateBudget()
    best = Fraction(0)
    for i in range(n + 1):
        budget.charge(1, "Omega^M")
        best = max(best, omega_d(eps, g, i, moduli, d, reading).value)
    return best


def family_start(eps: Fraction, chi: Callable[[int], int], d: int, tau: Fraction) -> int:
    """n0 = max{chi(ceil(96d/((1-tau)eps^2))), chi(ceil(48d^2/((1-tau)eps^2)))}."""
    base = (1 - tau) * eps * eps
    return max(int(chi(math.ceil(Fraction(96 * d) / base))),
               int(chi(math.ceil(Fraction(48 * d * d) / base))))


def xi_family(
    eps: Number,
    g: SeqFn,
    moduli: Moduli,
    rho: ModulusFn,
    d: int,
    n_ops: int,
    tau: Number | None = None,
    overrides: dict[str, int] | None = None,
    reading: OmegaReading | str = OmegaReading.PROOF,
    *,
    memoized: bool = False,
    budget: RateBudget | None = None,
    tower_reading: TowerReading | str = TowerReading.PROOF,
) -> RateValue:
    """phi3'(eps^2/12d^2, max{n0, chi_hat(rho(d, 1/(K N)))}) for the cyclic family.

    The tower majorant is f(k) = ceil(1 / rho(d, Omega^M(eps/2, g~^M, max{n0,
    chi_hat(rho(d, 1/(N k)))}))) at accuracy eps_d = ((1-tau) eps^2/96)^2 / (2 d^2).
    """
    e = _eps(eps)
    ta = _tau(moduli, tau)
    budget = budget if budget is not None else RateBudget()
    overrides = dict(overrides or {})
    n0 = family_start(e, moduli.chi, d, ta)
    eps_d = ((1 - ta) * e * e / 96) ** 2 / (2 * d * d)
    gm = _monotone_seq(g_tilde(g), budget)
    quantities: dict[str, Any] = {"n0": n0, "eps_d": eps_d, "N": n_ops}
    expression = f"phi3'({e * e / (12 * d * d)}, max(n0, chi_hat(rho(d, 1/(K*{n_ops})))))"

    def start(k: int) -> int:
        level = to_fraction(float(rho(d, 1.0 / (n_ops * k))))
        return max(n0, chi_hat(level, moduli, d, n_ops))

    def f_fn(k: int) -> int:
        omega = omega_d_monotone(e / 2, gm, start(k), moduli, d, reading, budget)
        return math.ceil(1 / to_fraction(float(rho(d, float(omega)))))

    forced_k = overrides.pop("k", None)
    try:
        if forced_k is not None:
            k = int(forced_k)
        else:
            shape = tower_shape(d, eps_d, ta, overrides)
            quantities.update(shape.to_dict())
            f = Closed(f_fn, "ceil(1/rho(d, Omega^M(...)))")
            k = k_levels(f, d, shape, budget, memoized, tower_reading)[-1]
        quantities["k"] = k
        if k.bit_length() > 1000:
            # 1/(K N) underflows a float modulus argument
            return RateValue.budget_exceeded(expression, **quantities)
        s = start(k)
        quantities["chi_hat"] = s
        value = int(moduli.phi3_mono(e * e / (12 * d * d), s))
    except BudgetExceededError:
        return RateValue.budget_exceeded(expression, **quantities)
    return RateValue.exact(value, expression, **quantities)


# ----------------------------------------------------------------------------
# Certificates
# ----------------------------------------------------------------------------

@dataclass
class Certificate:
    """A bound together with the measured witness, if any.

    Attributes:
        instance: name of the problem instance
        mode: which bound was evaluated
        epsilon: accuracy
        g: description of the counterfunction g
        bound: the evaluated (or symbolic) bound
        empirical_witness: least metastable index found on a trajectory
        vip_epsilon_prime: majorant k' with eps' = 1/k' (quantitative mode)
        quantities: every evaluated sub-quantity
    """
    instance: str
    mode: CertifyMode
    epsilon: Fraction
    g: str
    bound: RateValue
    empirical_witness: int | None = None
    vip_epsilon_prime: RateValue | None = None
    quantities: dict[str, Any] = field(default_factory=dict)
    verified: bool = False

    @property
    def status(self) -> CertificateStatus:
        if not self.bound.is_finite:
            return CertificateStatus.BOUND_SYMBOLIC
        if self.verified:
            return CertificateStatus.VERIFIED_EMPIRICALLY
        return CertificateStatus.BOUND_EVALUATED

    def attach_witness(self, witness: int | None) -> None:
        """Record a measured witness; raises CheckFailedError if it exceeds a finite bound."""
        self.empirical_witness = witness
        if witness is None or self.bound.value is None:
            return
        if witness > self.bound.value:
            raise CheckFailedError(
                f"empirical witness {witness} exceeds the bound {self.bound.describe()}"
            )
        self.verified = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance": self.instance,
            "mode": str(self.mode),
            "epsilon": str(self.epsilon),
            "g": self.g,
            "bound": self.bound.to_dict(),
            "empirical_witness": self.empirical_witness,
            "vip_epsilon_prime": None if self.vip_epsilon_prime is None else self.vip_epsilon_prime.to_dict(),
            "quantities": _jsonable(self.quantities),
            "status": str(self.status),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
