"""
hsdm command-line entry point.

    hsdm solve   --spec SPEC [--scheme S] [--steps N] [--out traj.csv]
    hsdm certify --spec SPEC --epsilon E [--g G] [--mode M] [--out cert.json]
    hsdm verify  --spec SPEC [--suite S] [--budget B] [--seed K] [--out report.json]
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

from commands import CertifyCommand, SolveCommand, VerifyCommand, load_instance
from config_manager import config
from enums import CertifyMode, LadderReading, OmegaReading, Scheme, TowerReading, VerifySuite
from error_handler import EXIT_OK, ErrorHandler, HsdmError
from logging_config import setup_logging

logger = logging.getLogger(__name__)


def _solve(args: argparse.Namespace) -> int:
    summary = SolveCommand(load_instance(args.spec), args.scheme, args.steps, args.out).execute()
    for line in summary.lines():
        print(line)
    return EXIT_OK


def _certify(args: argparse.Namespace) -> int:
    overrides = {
        key: value
        for key, value in (("n_eps_tilde", args.n_eps_tilde), ("i0", args.i0), ("k", args.k))
        if value is not None
    }
    command = CertifyCommand(
        load_instance(args.spec),
        args.epsilon,
        mode=args.mode,
        g=args.g,
        out=args.out,
        overrides=overrides,
        memoized=args.memoized,
        check=not args.no_check,
        reading=args.reading,
        tower_reading=args.tower_reading,
    )
    outcome = command.execute()
    if outcome.path is None:
        print(outcome.certificate.to_json())
    else:
        print(f"bound: {outcome.certificate.bound.describe()}")
        print(f"status: {outcome.certificate.status}")
        print(f"certificate: {outcome.path}")
    for check in outcome.checks:
        print(f"{check.name}: {check.status}")
    return EXIT_OK


def _verify(args: argparse.Namespace) -> int:
    command = VerifyCommand(
        load_instance(args.spec),
        args.suite,
        epsilon=args.epsilon,
        out=args.out,
        seed=args.seed,
        budget=args.budget,
        cases=args.cases,
        ladder=args.ladder,
    )
    report = command.execute()
    if args.out is None:
        print(report.to_json())
    else:
        print(", ".join(f"{k}: {v}" for k, v in sorted(report.counts().items())))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsdm",
        description="Hybrid steepest descent solver with quantitative rate certificates",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true", help="Debug output on the console")
    common.add_argument("--budget", type=int, help="Evaluation budget (overrides budgets.evaluations)")
    common.add_argument("--seed", type=int, help="Seed for sampled checks (overrides verify.seed)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="Run an iteration scheme and write the trajectory")
    p.add_argument("--spec", required=True, help="Problem spec (JSON)")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], help="Default: hsdm_single or hsdm_cyclic")
    p.add_argument("--steps", type=int, help="Number of steps (default: the problem file's steps)")
    p.add_argument("--out", help="Trajectory CSV path")
    p.set_defaults(func=_solve)

    p = sub.add_parser("certify", parents=[common], help="Evaluate a rate certificate")
    p.add_argument("--spec", required=True, help="Problem spec (JSON)")
    p.add_argument("--epsilon", required=True, help="Accuracy, e.g. 0.2 or 1/5")
    p.add_argument("--g", help="Counterfunction g, e.g. 'n+1', '2*n', 'max(n,3)' (default: the problem's g)")
    p.add_argument("--mode", choices=[m.value for m in CertifyMode], default=CertifyMode.SINGLE.value)
    p.add_argument("--reading", choices=[r.value for r in OmegaReading], default=OmegaReading.PROOF.value,
                   help="Reading of Omega in family mode")
    p.add_argument("--tower-reading", dest="tower_reading", choices=[r.value for r in TowerReading],
                   default=TowerReading.PROOF.value, help="Level indexing of the k-tower")
    p.add_argument("--n-eps-tilde", dest="n_eps_tilde", type=int, help="Override n for the tower")
    p.add_argument("--i0", type=int, help="Override the top tower level")
    p.add_argument("--k", type=int, help="Override the tower value K (family mode)")
    p.add_argument("--memoized", action="store_true", help="Closed-form evaluation of iterated majorants")
    p.add_argument("--no-check", dest="no_check", action="store_true",
                   help="Skip the empirical witness check")
    p.add_argument("--out", help="Certificate JSON path")
    p.set_defaults(func=_certify)

    p = sub.add_parser("verify", parents=[common], help="Run a verification suite")
    p.add_argument("--spec", required=True, help="Problem spec (JSON)")
    p.add_argument("--suite", choices=[s.value for s in VerifySuite], default=VerifySuite.ALL.value)
    p.add_argument("--epsilon", default="1", help="Accuracy for the adversary runs")
    p.add_argument("--cases", type=int, help="Randomized cases per lemma (default: verify.fuzzCases)")
    p.add_argument("--ladder", choices=[r.value for r in LadderReading],
                   help="psi-ladder walk of the tower runs (default: iteration.ladderReading)")
    p.add_argument("--out", help="Report JSON path")
    p.set_defaults(func=_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point for the hsdm CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(console_level="DEBUG" if args.verbose else None)

    if args.budget is not None:
        config.set_setting("budgets", "evaluations", args.budget)
        config.set_setting("budgets", "applications", args.budget)
    if args.seed is not None:
        config.set_setting("verify", "seed", args.seed)

    try:
        return int(args.func(args))
    except HsdmError as e:
        message = ErrorHandler.log_exception(e, args.command)
        print(message, file=sys.stderr)
        return ErrorHandler.exit_code_for(e)
    except Exception as e:
        message = ErrorHandler.log_exception(e, f"{args.command} (unexpected)")
        print(message, file=sys.stderr)
        return ErrorHandler.exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
