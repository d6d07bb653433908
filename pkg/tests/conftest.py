"""
Shared pytest fixtures for the hsdm suite.

Configuration fixtures write a throwaway config.json; problem fixtures build
the bundled specs under config/problems; the rest are small operators and
schedules with hand-checkable values.
"""
import json
import pathlib
import sys

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src" / "python"))

from config_manager import ConfigManager  # noqa: E402
from hilbert_ops import AffineMap, ClaimedClass, ProjectBall, ProjectHalfspace  # noqa: E402
from problem_spec import load_problem  # noqa: E402
from schedules import ModulusBundle, Schedule  # noqa: E402


@pytest.fixture
def hsdm_paths():
    """Repo locations the tests read from."""
    return {
        "root": ROOT,
        "python": ROOT / "src" / "python",
        "config": ROOT / "config",
        "problems": ROOT / "config" / "problems",
    }


# Configuration
# -------------

@pytest.fixture
def test_config_data():
    """Small budgets and a fixed seed; console logging off."""
    numerics = {"checkSlack": 1e-9, "predicateSlack": 1e-12, "lipschitzSlack": 1e-12, "mpDigits": 30}
    return {
        "logging": {"level": "INFO", "file": "logs/test.log", "console": False},
        "numerics": numerics,
        "budgets": {"evaluations": 1000, "applications": 1000, "magnitudeBits": 4096},
        "iteration": {"resolventTolerance": 1e-8, "resolventCapFactor": 10},
        "verify": {"seed": 11, "samples": 50, "fuzzCases": 20},
    }


@pytest.fixture
def test_config_files(tmp_path, test_config_data):
    """test_config_data written to tmp_path/config.json."""
    path = tmp_path / "config.json"
    path.write_text(json.dumps(test_config_data), encoding="utf-8")
    return {"config_path": path, "tmp_path": tmp_path}


@pytest.fixture
def test_config_manager(test_config_files):
    return ConfigManager(cfg_path=test_config_files["config_path"], exit_on_error=False)


# Problem Fixtures
# ----------------

@pytest.fixture
def problem_path(hsdm_paths):
    """Resolve a bundled problem spec by name."""
    return lambda name: hsdm_paths['problems'] / f"{name}.json"


@pytest.fixture
def quadratic_instance(problem_path):
    """F(x) = x - a over the unit ball, mu = 1, so G is the constant a = (0.3, 0.2)."""
    return load_problem(problem_path("quadratic_ball")).build()


@pytest.fixture
def family_instance(problem_path):
    """Projections onto {x1 <= 0} and {x2 <= 0}, G(x) = x/2 + (0.05, 0.05)."""
    return load_problem(problem_path("two_halfspaces")).build()


@pytest.fixture
def line_pair_instance(problem_path):
    """Two lines through the origin at 30 degrees."""
    return load_problem(problem_path("line_pair")).build()


@pytest.fixture
def tower_instance(problem_path):
    """Projection onto {x1 <= 0}, G(x) = x/4 + (0.06, 0.03), d = 1."""
    return load_problem(problem_path("toy_tower")).build()


@pytest.fixture
def ball():
    return ProjectBall(np.zeros(2), 0.5)


@pytest.fixture
def halfspace():
    return ProjectHalfspace(np.array([1.0, 0.0]), 0.0)


@pytest.fixture
def make_contraction():
    """G(x) = tau x + (1 - tau) a, with fixed point a."""
    def build(tau, a=(0.4, 0.2)):
        a = np.asarray(a, dtype=np.float64)
        return AffineMap(tau * np.eye(a.size), (1.0 - tau) * a, ClaimedClass.contraction(tau), a)
    return build


@pytest.fixture
def harmonic():
    """lambda_n = 1/(n+1)."""
    return Schedule.power(1)


@pytest.fixture
def sqrt_schedule():
    """lambda_n = (n+1)^(-1/2)."""
    return Schedule.power("1/2")


@pytest.fixture
def harmonic_bundle(harmonic):
    return ModulusBundle(harmonic, 0)
