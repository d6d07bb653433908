"""
Tests for the solve / certify / verify commands and the CLI exit codes.
"""
import json

import pytest

from commands import CertifyCommand, SolveCommand, VerifyCommand, load_instance
from config_manager import config
from enums import CertificateStatus, CertifyMode, LadderReading, Scheme
from error_handler import (
    EXIT_CHECK_FAILED,
    EXIT_NO_MODULUS,
    EXIT_OK,
    EXIT_SPEC_INVALID,
    CheckFailedError,
    SpecValidationError,
)
from main import build_parser, main


@pytest.fixture
def spec_file(tmp_path, problem_path):
    """Write a variant of a bundled spec and return its path."""
    def write(name, **changes):
        raw = json.loads(problem_path(name).read_text())
        raw.update(changes)
        for key in [k for k, v in changes.items() if v is None]:
            del raw[key]
        path = tmp_path / f"{name}_variant.json"
        path.write_text(json.dumps(raw))
        return path
    return write


class TestSolveCommand:
    def test_summary_and_csv(self, quadratic_instance, tmp_path):
        out = tmp_path / "traj.csv"
        summary = SolveCommand(quadratic_instance, steps=20, out=out).execute()
        assert summary.scheme is Scheme.HSDM_SINGLE
        assert summary.steps == 20
        assert summary.distance_to_solution is not None
        rows = out.read_text().splitlines()
        assert rows[0] == "n,lambda,x0,x1,residual"
        assert len(rows) == 22
        assert any(line.startswith("trajectory:") for line in summary.lines())

    def test_proj_grad_needs_monotone_map(self, tower_instance):
        with pytest.raises(SpecValidationError):
            SolveCommand(tower_instance, Scheme.PROJ_GRAD, steps=5).execute()

    def test_family_default_scheme(self, family_instance):
        summary = SolveCommand(family_instance, steps=10).execute()
        assert summary.scheme is Scheme.HSDM_CYCLIC
        assert summary.path is None


class TestCertifyCommand:
    def test_epsilon_must_be_positive(self, quadratic_instance):
        with pytest.raises(SpecValidationError):
            CertifyCommand(quadratic_instance, 0)

    def test_forced_tower_value(self, quadratic_instance, tmp_path):
        out = tmp_path / "cert.json"
        outcome = CertifyCommand(
            quadratic_instance, "1/2", overrides={"k": 3}, check=False, out=out,
        ).execute()
        assert outcome.certificate.bound.is_finite
        assert outcome.certificate.status is CertificateStatus.BOUND_EVALUATED
        payload = json.loads(out.read_text())
        assert payload["epsilon"] == "1/2"
        assert payload["g"] == "n+2"

    def test_family_mode_needs_condition(self, tower_instance):
        with pytest.raises(SpecValidationError, match="condition"):
            CertifyCommand(tower_instance, "1/2", mode=CertifyMode.FAMILY).execute()

    def test_single_mode_rejects_family(self, family_instance):
        with pytest.raises(SpecValidationError):
            CertifyCommand(family_instance, "1/2", mode=CertifyMode.SINGLE).execute()

    def test_asy_mode_checks_residual(self, family_instance):
        outcome = CertifyCommand(family_instance, "1/2", mode=CertifyMode.ASY).execute()
        assert [c.status for c in outcome.checks] == ["pass"]
        assert outcome.certificate.verified
        assert outcome.certificate.bound.quantities["N"] == 2


class TestVerifyCommand:
    def test_confinement_suite(self, family_instance, tmp_path):
        report = VerifyCommand(family_instance, "confinement", out=tmp_path / "r.json", seed=1).execute()
        assert report.passed
        assert json.loads((tmp_path / "r.json").read_text())["seed"] == 1

    def test_failed_check_raises_after_writing(self, spec_file, tmp_path):
        instance = load_instance(spec_file("quadratic_ball", solution=[0.0, 0.0]))
        out = tmp_path / "lemmas.json"
        with pytest.raises(CheckFailedError, match="vip_certificate"):
            VerifyCommand(instance, "lemmas", epsilon="1/100", out=out, seed=3, cases=20).execute()
        assert out.exists()

    def test_ladder_reaches_suite(self, tower_instance, mocker):
        run_suite = mocker.patch("commands.run_suite")
        run_suite.return_value.passed = True
        VerifyCommand(tower_instance, "adversary", ladder="doubling", budget=10).execute()
        assert run_suite.call_args.kwargs["ladder"] is LadderReading.DOUBLING
        assert run_suite.call_args.kwargs["budget"] == 10


@pytest.mark.integration
class TestCli:
    def test_parser_requires_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_solve(self, problem_path, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        code = main([
            "solve", "--spec", str(problem_path("quadratic_ball")), "--steps", "30", "--out", str(out),
        ])
        assert code == EXIT_OK
        assert "steps: 30" in capsys.readouterr().out
        assert len(out.read_text().splitlines()) == 32

    def test_certify_prints_json(self, problem_path, capsys):
        code = main([
            "certify", "--spec", str(problem_path("quadratic_ball")), "--epsilon", "1/2",
            "--k", "3", "--no-check",
        ])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["mode"] == "single"
        assert payload["status"] == "bound_evaluated"

    def test_no_modulus_exit_code(self, problem_path, capsys):
        code = main([
            "certify", "--spec", str(problem_path("toy_tower")), "--epsilon", "1/2", "--mode", "full",
        ])
        assert code == EXIT_NO_MODULUS
        assert "no phi2 modulus" in capsys.readouterr().err

    def test_single_mode_needs_no_phi2(self, problem_path, capsys):
        # same rho = 1 schedule: the resolvent bound only uses h and chi
        code = main([
            "certify", "--spec", str(problem_path("toy_tower")), "--epsilon", "1/2",
            "--n-eps-tilde", "1", "--i0", "0", "--no-check",
        ])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["mode"] == "single"
        assert payload["status"] in ("bound_evaluated", "bound_symbolic")

    def test_tower_reading_flag(self, problem_path, capsys):
        code = main([
            "certify", "--spec", str(problem_path("toy_tower")), "--epsilon", "1/2",
            "--n-eps-tilde", "1", "--i0", "0", "--no-check", "--tower-reading", "printed",
        ])
        assert code == EXIT_OK
        assert json.loads(capsys.readouterr().out)["quantities"]["tower_reading"] == "printed"

    def test_invalid_spec_exit_code(self, spec_file):
        code = main(["solve", "--spec", str(spec_file("quadratic_ball", start=None))])
        assert code == EXIT_SPEC_INVALID

    def test_missing_spec_exit_code(self, tmp_path):
        assert main(["solve", "--spec", str(tmp_path / "nope.json")]) == EXIT_SPEC_INVALID

    def test_bad_epsilon_exit_code(self, problem_path):
        code = main(["certify", "--spec", str(problem_path("quadratic_ball")), "--epsilon", "0"])
        assert code == EXIT_SPEC_INVALID

    def test_failed_check_exit_code(self, spec_file):
        code = main([
            "verify", "--spec", str(spec_file("quadratic_ball", solution=[0.0, 0.0])),
            "--suite", "lemmas", "--epsilon", "1/100", "--cases", "20",
        ])
        assert code == EXIT_CHECK_FAILED

    def test_budget_and_seed_flags_reach_config(self, problem_path, mocker):
        set_setting = mocker.patch.object(config, "set_setting")
        code = main([
            "solve", "--spec", str(problem_path("quadratic_ball")), "--steps", "3",
            "--budget", "500", "--seed", "11",
        ])
        assert code == EXIT_OK
        set_setting.assert_any_call("budgets", "evaluations", 500)
        set_setting.assert_any_call("budgets", "applications", 500)
        set_setting.assert_any_call("verify", "seed", 11)

    def test_verify_counts(self, problem_path, tmp_path, capsys):
        code = main([
            "verify", "--spec", str(problem_path("two_halfspaces")), "--suite", "confinement",
            "--out", str(tmp_path / "report.json"),
        ])
        assert code == EXIT_OK
        assert "pass: 1" in capsys.readouterr().out


if __name__ == "__main__":
    pytest.main(["-v", __file__])
