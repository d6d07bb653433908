import json
import pathlib
import sys
import logging
from typing import Any, NoReturn

from custom_types import BudgetConfig, IterationConfig, NumericsConfig, VerifyConfig

logger = logging.getLogger(__name__)

SOLVER_SECTIONS = ("numerics", "budgets", "iteration", "verify")
REQUIRED_SECTIONS = ("logging", *SOLVER_SECTIONS)

DEFAULT_SLACK = 1e-9


class ConfigManager:
    """Holds the solver defaults read from config.json.

    The numerics, budgets, iteration and verify sections are exposed as plain
    dicts; CLI flags override them in memory through set_setting.
    """

    numerics: dict[str, Any]
    budgets: dict[str, Any]
    iteration: dict[str, Any]
    verify: dict[str, Any]
    exit_on_error: bool
    _cfg: dict[str, Any]
    cfg_path: str | pathlib.Path

    def __init__(
        self,
        cfg_path: str | pathlib.Path | None = None,
        exit_on_error: bool = True
    ) -> None:
        """
        Args:
            cfg_path: config.json to read; the repo's config/config.json when None
            exit_on_error: exit the process on a bad file instead of raising (tests pass False)
        """
        self.exit_on_error = exit_on_error
        self._cfg = {}
        for section in SOLVER_SECTIONS:
            setattr(self, section, {})

        if cfg_path is None:
            cfg_path = pathlib.Path(__file__).parents[2] / "config" / "config.json"
        self.cfg_path = cfg_path

        self.load_config()

    def _fail(self, exc: Exception) -> NoReturn:
        logger.error("Unusable hsdm configuration %s: %s", self.cfg_path, exc)
        if self.exit_on_error:
            sys.exit(1)
        raise exc

    def load_config(self) -> None:
        """Read cfg_path and bind the solver sections."""
        try:
            raw = json.loads(pathlib.Path(self.cfg_path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            self._fail(RuntimeError(f"cannot read configuration '{self.cfg_path}': {e}"))

        missing = [s for s in REQUIRED_SECTIONS if s not in raw]
        if missing:
            self._fail(KeyError(f"configuration '{self.cfg_path}' lacks section(s): {', '.join(missing)}"))

        self._cfg = raw
        for section in SOLVER_SECTIONS:
            setattr(self, section, raw[section])
        logger.debug("Loaded configuration from %s", self.cfg_path)

    def get_setting(self, section: str, key: str, default: Any = None) -> Any:
        """Value of section.key, or default when either is absent."""
        block = self._cfg.get(section)
        if not isinstance(block, dict):
            return default
        return block.get(key, default)

    def set_setting(self, section: str, key: str, value: Any) -> None:
        """Override section.key for this process only; config.json is not rewritten."""
        self._cfg.setdefault(section, {})[key] = value

    def get_logging_setting(self, key: str, default: Any = None) -> Any:
        return self.get_setting("logging", key, default)

    def get_numerics(self) -> NumericsConfig:
        """Tolerances and slacks applied by every inequality check."""
        return self._cfg.get("numerics", {})  # type: ignore[return-value]

    def get_budgets(self) -> BudgetConfig:
        """Evaluation and magnitude budgets for towers and counterfunction play."""
        return self._cfg.get("budgets", {})  # type: ignore[return-value]

    def get_iteration(self) -> IterationConfig:
        """Inner-solver settings for resolvent points and fixed-set projections."""
        return self._cfg.get("iteration", {})  # type: ignore[return-value]

    def get_verify(self) -> VerifyConfig:
        """Seed and sample sizes for the verification harness."""
        return self._cfg.get("verify", {})  # type: ignore[return-value]

    def slack(self, key: str = "checkSlack") -> float:
        return float(self.get_setting("numerics", key, DEFAULT_SLACK))


config = ConfigManager()
