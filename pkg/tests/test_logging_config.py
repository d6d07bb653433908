"""
Tests for the root-logger setup driven by the logging section.
"""
import logging
import logging.handlers

import pytest

from config_manager import config
from logging_config import ErrorRaisingHandler, setup_logging


@pytest.fixture
def logging_settings(mocker, tmp_path):
    """Patch the logging section and restore the root logger afterwards."""
    settings = {
        "level": "DEBUG",
        "file": str(tmp_path / "logs" / "run.log"),
        "console": True,
        "consoleLevel": "WARNING",
        "raiseOnError": False,
    }
    mocker.patch.object(
        config, "get_logging_setting",
        side_effect=lambda key, default=None: settings.get(key, default),
    )
    root = logging.getLogger()
    saved_handlers, saved_level = root.handlers[:], root.level
    yield settings
    for handler in root.handlers:
        if handler not in saved_handlers:
            handler.close()
    root.handlers[:] = saved_handlers
    root.setLevel(saved_level)


class TestSetupLogging:
    def test_console_and_file_handlers(self, logging_settings, tmp_path):
        setup_logging()
        handlers = logging.getLogger().handlers
        files = [h for h in handlers if isinstance(h, logging.handlers.RotatingFileHandler)]
        consoles = [h for h in handlers if type(h) is logging.StreamHandler]
        assert len(files) == 1 and files[0].level == logging.DEBUG
        assert len(consoles) == 1 and consoles[0].level == logging.WARNING
        assert (tmp_path / "logs" / "run.log").exists()

    def test_verbose_lowers_console_level(self, logging_settings):
        setup_logging(console_level="DEBUG")
        consoles = [h for h in logging.getLogger().handlers if type(h) is logging.StreamHandler]
        assert consoles[0].level == logging.DEBUG

    def test_console_can_be_disabled(self, logging_settings):
        logging_settings["console"] = False
        setup_logging()
        assert not any(type(h) is logging.StreamHandler for h in logging.getLogger().handlers)

    def test_unknown_level_falls_back(self, logging_settings):
        logging_settings["level"] = "chatty"
        setup_logging()
        handlers = logging.getLogger().handlers
        files = [h for h in handlers if isinstance(h, logging.handlers.RotatingFileHandler)]
        assert files[0].level == logging.INFO

    def test_raise_on_error(self, logging_settings):
        setup_logging(raise_on_error=True)
        assert any(isinstance(h, ErrorRaisingHandler) for h in logging.getLogger().handlers)
        with pytest.raises(RuntimeError, match="tower diverged"):
            logging.getLogger("hsdm.test").error("tower diverged")


class TestErrorRaisingHandler:
    def test_warnings_pass_through(self):
        record = logging.LogRecord("rates", logging.WARNING, __file__, 1, "budget low", None, None)
        ErrorRaisingHandler().emit(record)

    def test_errors_raise(self):
        record = logging.LogRecord("rates", logging.ERROR, __file__, 1, "bad %s", ("bound",), None)
        with pytest.raises(RuntimeError, match="rates: bad bound"):
            ErrorRaisingHandler().emit(record)


if __name__ == "__main__":
    pytest.main(["-v", __file__])
