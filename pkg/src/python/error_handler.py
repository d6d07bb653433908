"""
hsdm error handling.

This module provides:
1. The exception hierarchy raised by the numerical modules, each class
   carrying the CLI exit code it maps to
2. A consistent error reporting pattern through the ``hsdm.error_handler`` logger
"""

import traceback
import logging
from typing import Any

logger = logging.getLogger("hsdm.error_handler")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_SPEC_INVALID = 2
EXIT_DIVERGENCE = 3
EXIT_NO_MODULUS = 4
EXIT_CHECK_FAILED = 5


class HsdmError(Exception):
    """Base class for all toolkit errors."""
    exit_code: int = EXIT_UNEXPECTED


class SpecValidationError(HsdmError, ValueError):
    """Inputs violate a stated precondition (dimension, parameter range, malformed tree)."""
    exit_code = EXIT_SPEC_INVALID


class ProjectionSearchError(SpecValidationError):
    """No candidate index up to n_eps satisfied the epsilon-projection claim."""

    def __init__(self, message: str, n_eps: int, examined: int) -> None:
        super().__init__(message)
        self.n_eps = n_eps
        self.examined = examined


class TrajectoryTooShortError(SpecValidationError):
    """A trajectory does not cover the indices a query needs."""

    def __init__(self, required: int, available: int) -> None:
        super().__init__(
            f"trajectory has {available} points but {required} are required"
        )
        self.required = required
        self.available = available


class DivergenceError(HsdmError, ArithmeticError):
    """An iteration produced non-finite values."""
    exit_code = EXIT_DIVERGENCE


class ResolventDivergenceError(DivergenceError):
    """The inner contraction solver exceeded its a-priori step cap."""

    def __init__(self, message: str, steps: int, residual: float) -> None:
        super().__init__(message)
        self.steps = steps
        self.residual = residual


class NoModulusError(HsdmError):
    """A modulus required by a bound does not exist for the schedule."""
    exit_code = EXIT_NO_MODULUS

    def __init__(self, kind: str, reason: str) -> None:
        super().__init__(f"no {kind} modulus: {reason}")
        self.kind = kind
        self.reason = reason


class CheckFailedError(HsdmError):
    """A verification check observed a violated conclusion."""
    exit_code = EXIT_CHECK_FAILED


class BudgetExceededError(HsdmError):
    """Counterfunction evaluation budget exhausted; carries the partial trace."""
    exit_code = EXIT_OK

    def __init__(self, limit: int, partial: Any = None) -> None:
        super().__init__(f"evaluation budget of {limit} exhausted")
        self.limit = limit
        self.partial = partial


class ErrorHandler:
    """Centralized error reporting for the hsdm toolkit."""

    @staticmethod
    def log_exception(e: Exception, context: str = "") -> str:
        """Log an exception with its stack trace."""
        error_type = type(e).__name__
        error_msg = str(e)

        if context:
            logger.error("%s: %s: %s", context, error_type, error_msg)
        else:
            logger.error("%s: %s", error_type, error_msg)

        logger.debug("".join(traceback.format_exception(e)))

        return f"{error_type}: {error_msg}"

    @staticmethod
    def show_error(message: str, title: str = "Error") -> None:
        """Log an error message."""
        logger.error("[%s] %s", title, message)

    @staticmethod
    def show_warning(message: str, title: str = "Warning") -> None:
        """Log a warning message."""
        logger.warning("[%s] %s", title, message)

    @staticmethod
    def show_info(message: str, title: str = "Info") -> None:
        """Log an info message."""
        logger.info("[%s] %s", title, message)

    @staticmethod
    def exit_code_for(e: BaseException) -> int:
        """Map an exception to the CLI exit code."""
        if isinstance(e, HsdmError):
            return e.exit_code
        return EXIT_UNEXPECTED
