"""Logging configuration for Bootdiff.

Log lines always go to stderr: stdout is reserved for the JSON command
reports of the CLI.
"""

import logging
import logging.config
import sys
from typing import Any

from app.config.base import BaseSettings
from app.core.exceptions import BootdiffException

# modules that log once per closure or per candidate shape
SEARCH_LOGGERS = ("app.services.dynamics", "app.services.difficulty")

FORMATS: dict[str, dict[str, str]] = {
    "default": {
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        "datefmt": "%H:%M:%S",
    },
    "detailed": {
        "format": "%(asctime)s %(processName)s %(name)s:%(lineno)d "
        "%(levelname)s - %(message)s",
        "datefmt": "%Y-%m-%d %H:%M:%S",
    },
    "json": {
        "format": '{"time": "%(asctime)s", "logger": "%(name)s", '
        '"level": "%(levelname)s", "message": "%(message)s"}',
        "datefmt": "%Y-%m-%dT%H:%M:%S",
    },
}


def _formatter_name(settings: BaseSettings) -> str:
    if settings.ENVIRONMENT == "production":
        return "json"
    return "detailed" if settings.DEBUG else "default"


def build_logging_config(
    settings: BaseSettings, level: str | None = None
) -> dict[str, Any]:
    """dictConfig mapping for the given settings and optional level override."""
    log_level = getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO)
    # search modules stay at INFO or above unless DEBUG mode is on
    search_level = log_level if settings.DEBUG else max(log_level, logging.INFO)

    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {name: dict(fmt) for name, fmt in FORMATS.items()},
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "level": log_level,
                "formatter": _formatter_name(settings),
                "stream": sys.stderr,
            },
        },
        "loggers": {
            "": {"level": log_level, "handlers": ["console"], "propagate": False},
            **{
                name: {
                    "level": search_level,
                    "handlers": ["console"],
                    "propagate": False,
                }
                for name in SEARCH_LOGGERS
            },
        },
    }


def _log_uncaught(exc_type, exc_value, exc_traceback) -> None:
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return

    logger = logging.getLogger(__name__)
    if isinstance(exc_value, BootdiffException):
        logger.error(f"{exc_value.error_code}: {exc_value.message}")
        return
    logger.critical("Uncaught exception", exc_info=(exc_type, exc_value, exc_traceback))


def setup_logging(settings: BaseSettings, level: str | None = None) -> None:
    """Configure stdlib logging and route uncaught exceptions through it."""
    logging.config.dictConfig(build_logging_config(settings, level))
    sys.excepthook = _log_uncaught
