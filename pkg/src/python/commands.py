"""
Command pattern for the solve / certify / verify actions.
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from config_manager import config
from enums import CertifyMode, LadderReading, OmegaReading, Scheme, TowerReading, VerifySuite
from error_handler import CheckFailedError, SpecValidationError
from iterates import Trajectory, iterate, resolvent_trajectory
from problem_spec import GFunction, ProblemInstance, load_problem, parse_g
from rates import (
    Certificate,
    RateBudget,
    RateValue,
    asy_rate,
    xi_corollary,
    xi_family,
    xi_full,
    xi_single,
)
from schedules import Number, to_fraction
from verify import (
    CheckReport,
    SuiteReport,
    asy_regularity_check,
    bound_witness_consistency,
    run_suite,
)

logger = logging.getLogger(__name__)


def load_instance(spec_path: str | Path) -> ProblemInstance:
    """Load, validate and build a problem spec, applying its budget overrides."""
    spec = load_problem(spec_path)
    for key, value in (spec.budgets or {}).items():
        config.set_setting("budgets", key, value)
    return spec.build()


class Command(ABC):
    """Base class for CLI commands."""
    def __init__(self, instance: ProblemInstance, out: str | Path | None = None) -> None:
        self.instance = instance
        self.out = Path(out) if out is not None else None

    @abstractmethod
    def execute(self) -> Any:
        """Run the command against the instance."""
        pass


@dataclass
class SolveSummary:
    scheme: Scheme
    steps: int
    final: list[float]
    final_residual: float | None
    distance_to_solution: float | None
    path: Path | None = None

    def lines(self) -> list[str]:
        out = [
            f"scheme: {self.scheme}",
            f"steps: {self.steps}",
            "final point: " + ", ".join(f"{x:.12g}" for x in self.final),
        ]
        if self.final_residual is not None:
            out.append(f"final residual: {self.final_residual:.6e}")
        if self.distance_to_solution is not None:
            out.append(f"distance to solution: {self.distance_to_solution:.6e}")
        if self.path is not None:
            out.append(f"trajectory: {self.path}")
        return out


class SolveCommand(Command):
    """Run one iteration scheme and write the trajectory CSV."""
    def __init__(
        self,
        instance: ProblemInstance,
        scheme: Scheme | str | None = None,
        steps: int | None = None,
        out: str | Path | None = None,
    ) -> None:
        super().__init__(instance, out)
        self.scheme = Scheme(scheme) if scheme is not None else instance.default_scheme
        self.steps = instance.spec.steps if steps is None else steps

    def run(self) -> Trajectory:
        inst = self.instance
        ops = inst.scheme_ops(self.scheme)
        match self.scheme:
            case Scheme.PROJ_GRAD:
                if inst.F is None:
                    raise SpecValidationError("proj_grad needs a spec with a monotone map")
                return iterate(self.scheme, ops, inst.F, inst.schedule, inst.u0, self.steps, mu=inst.mu)
            case _:
                return iterate(
                    self.scheme, ops, inst.G, inst.schedule, inst.u0, self.steps,
                    ordering=inst.spec.viscosity_ordering,
                )

    def execute(self) -> SolveSummary:
        traj = self.run()
        path = traj.write_csv(self.out) if self.out is not None else None
        solution = self.instance.solution
        return SolveSummary(
            scheme=self.scheme,
            steps=traj.steps,
            final=[float(x) for x in traj.final],
            final_residual=float(traj.residual_log[-1]) if traj.steps else None,
            distance_to_solution=(
                None if solution is None else float(np.linalg.norm(traj.final - solution))
            ),
            path=path,
        )


@dataclass
class CertifyOutcome:
    certificate: Certificate
    checks: list[CheckReport] = field(default_factory=list)
    path: Path | None = None


class CertifyCommand(Command):
    """Evaluate a rate certificate and, when finite, check it against a measured witness.

    Modes:
        single: Xi for the resolvent path
        corollary: the Cauchy form Xi(eps/2, n + g(n))
        full / quant: the plain iteration with the shift c (quant adds delta and eps')
        family: the cyclic scheme under the problem's condition modulus
        asy: chi_hat, checked by measuring the composite residual there
    """
    def __init__(
        self,
        instance: ProblemInstance,
        epsilon: Number,
        mode: CertifyMode | str = CertifyMode.SINGLE,
        g: str | GFunction | None = None,
        out: str | Path | None = None,
        overrides: dict[str, int] | None = None,
        memoized: bool = False,
        check: bool = True,
        reading: OmegaReading | str = OmegaReading.PROOF,
        tower_reading: TowerReading | str = TowerReading.PROOF,
    ) -> None:
        super().__init__(instance, out)
        self.epsilon = to_fraction(epsilon)
        if self.epsilon <= 0:
            raise SpecValidationError("epsilon must be positive")
        self.mode = CertifyMode(mode)
        if g is None:
            self.g: GFunction = instance.g
        else:
            self.g = g if isinstance(g, GFunction) else parse_g(g)
        self.overrides = overrides or {}
        self.memoized = memoized
        self.check = check
        self.reading = OmegaReading(reading)
        self.tower_reading = TowerReading(tower_reading)

    def _bound(self) -> tuple[RateValue, RateValue | None, dict[str, Any]]:
        inst = self.instance
        moduli = inst.bundle
        tau = to_fraction(inst.tau)
        budget = RateBudget()
        kwargs: dict[str, Any] = {
            "memoized": self.memoized, "budget": budget, "tower_reading": self.tower_reading,
        }
        match self.mode:
            case CertifyMode.SINGLE:
                self._single_map()
                value = xi_single(self.epsilon, self.g, moduli, inst.d, tau, self.overrides, **kwargs)
                return value, None, {}
            case CertifyMode.COROLLARY:
                self._single_map()
                value = xi_corollary(self.epsilon, self.g, moduli, inst.d, tau, self.overrides, **kwargs)
                return value, None, {}
            case CertifyMode.FULL | CertifyMode.QUANT:
                self._single_map()
                full = xi_full(self.epsilon, self.g, moduli, inst.d, tau, self.mode, self.overrides, **kwargs)
                extra: dict[str, Any] = {"c": full.c}
                if full.delta is not None:
                    extra["delta"] = full.delta
                return full.bound, full.eps_prime, extra
            case CertifyMode.FAMILY:
                if inst.condition is None:
                    raise SpecValidationError("family mode needs a condition modulus in the spec")
                value = xi_family(
                    self.epsilon, self.g, moduli, inst.condition, inst.d, inst.n_ops, tau,
                    self.overrides, self.reading, **kwargs,
                )
                return value, None, {}
            case CertifyMode.ASY:
                n = asy_rate(self.epsilon, moduli, inst.d, inst.n_ops)
                expression = f"chi_hat({self.epsilon})"
                return RateValue.exact(n, expression, chi_hat=n, N=inst.n_ops, d=inst.d), None, {}
        raise SpecValidationError(f"unknown certify mode {self.mode}")

    def _single_map(self) -> None:
        if self.instance.n_ops != 1:
            raise SpecValidationError(f"{self.mode} mode needs a spec with a single operator")

    def witness_trajectory(self) -> Trajectory:
        """The sequence a finite bound speaks about: v_n for single/corollary, u_n otherwise."""
        inst = self.instance
        steps = inst.spec.steps
        if self.mode in (CertifyMode.SINGLE, CertifyMode.COROLLARY):
            return resolvent_trajectory(inst.T, inst.G, inst.schedule, steps)
        return iterate(inst.default_scheme, inst.ops, inst.G, inst.schedule, inst.u0, steps)

    def execute(self) -> CertifyOutcome:
        bound, eps_prime, extra = self._bound()
        quantities = {**bound.quantities, **extra}
        if self.mode is not CertifyMode.ASY:
            quantities["tower_reading"] = str(self.tower_reading)
        certificate = Certificate(
            instance=self.instance.name,
            mode=self.mode,
            epsilon=self.epsilon,
            g=self.g.text,
            bound=bound,
            vip_epsilon_prime=eps_prime,
            quantities=quantities,
        )
        logger.info("%s certificate for %s: %s", self.mode, self.instance.name, bound.describe())
        outcome = CertifyOutcome(certificate)
        if self.check and bound.is_finite:
            if self.mode is CertifyMode.ASY:
                report = asy_regularity_check(self.instance, self.epsilon)
                certificate.verified = report.status == "pass"
            else:
                report = bound_witness_consistency(certificate, self.witness_trajectory(), self.g)
            outcome.checks.append(report)
        if self.out is not None:
            self.out.parent.mkdir(parents=True, exist_ok=True)
            self.out.write_text(certificate.to_json() + "\n", encoding="utf-8")
            outcome.path = self.out
        if any(c.failed for c in outcome.checks):
            raise CheckFailedError(
                f"certificate check failed: {outcome.checks[-1].to_dict()['details']}"
            )
        return outcome


class VerifyCommand(Command):
    """Run a verification suite and write its report; a failed check raises after writing."""
    def __init__(
        self,
        instance: ProblemInstance,
        suite: VerifySuite | str = VerifySuite.ALL,
        epsilon: Number = 1,
        out: str | Path | None = None,
        seed: int | None = None,
        budget: int | None = None,
        cases: int | None = None,
        ladder: LadderReading | str | None = None,
    ) -> None:
        super().__init__(instance, out)
        self.suite = VerifySuite(suite)
        self.epsilon = epsilon
        self.seed = seed if seed is not None else instance.spec.seed
        self.budget = budget
        self.cases = cases
        self.ladder = LadderReading(ladder) if ladder is not None else None

    def execute(self) -> SuiteReport:
        report = run_suite(
            self.instance, self.suite,
            eps=self.epsilon, seed=self.seed, budget=self.budget, cases=self.cases, ladder=self.ladder,
        )
        if self.out is not None:
            report.write(self.out)
        if not report.passed:
            failed = [c.name for c in report.checks if c.failed]
            raise CheckFailedError(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return report
