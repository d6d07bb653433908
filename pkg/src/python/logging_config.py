"""
Logging setup for hsdm runs.

Everything is driven by the "logging" section of config.json. Console
records go to stderr, since certify and verify print JSON on stdout; the
rotating file keeps the full record of long tower and fuzz runs.
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from config_manager import config

LOG_FORMAT = "%(asctime)s %(levelname)-7s [%(name)s] %(message)s"
DATE_FORMAT = "%H:%M:%S"

QUIET_LOGGERS = ("hypothesis", "mpmath")


class ErrorRaisingHandler(logging.Handler):
    """Turns ERROR and CRITICAL records into a RuntimeError (logging.raiseOnError)."""

    def emit(self, record: logging.LogRecord) -> None:
        if record.levelno < logging.ERROR:
            return
        raise RuntimeError(f"{record.name}: {record.getMessage()}")


def _level(name: str | None, fallback: int) -> int:
    if not name:
        return fallback
    value = logging.getLevelName(name.upper())
    return value if isinstance(value, int) else fallback


def _console_handler(level: int, formatter: logging.Formatter) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def _file_handler(level: int, formatter: logging.Formatter) -> logging.handlers.RotatingFileHandler | None:
    target = Path(config.get_logging_setting("file", "logs/hsdm.log"))
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.handlers.RotatingFileHandler(
            target,
            maxBytes=int(config.get_logging_setting("maxBytes", 10 * 1024 * 1024)),
            backupCount=int(config.get_logging_setting("backupCount", 3)),
            encoding="utf-8",
        )
    except OSError as e:
        print(f"hsdm: file logging disabled ({target}: {e})", file=sys.stderr)
        return None
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def setup_logging(raise_on_error: bool | None = None, console_level: str | None = None) -> None:
    """Install the hsdm handlers on the root logger, replacing any present.

    Keys read from the logging section: level and file, maxBytes and
    backupCount for the rotating file, console and consoleLevel for stderr,
    raiseOnError to escalate errors.

    Args:
        raise_on_error: wins over logging.raiseOnError when given
        console_level: wins over logging.consoleLevel; main passes "DEBUG" for --verbose
    """
    file_level = _level(config.get_logging_setting("level"), logging.INFO)
    console_threshold = _level(
        console_level or config.get_logging_setting("consoleLevel"), logging.WARNING
    )
    if raise_on_error is None:
        raise_on_error = bool(config.get_logging_setting("raiseOnError", False))

    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(min(file_level, console_threshold))
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    if config.get_logging_setting("console", True):
        root.addHandler(_console_handler(console_threshold, formatter))

    file_handler = _file_handler(file_level, formatter)
    if file_handler is not None:
        root.addHandler(file_handler)
        root.info("hsdm logging at %s -> %s", logging.getLevelName(file_level), file_handler.baseFilename)

    if raise_on_error:
        root.addHandler(ErrorRaisingHandler())

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
