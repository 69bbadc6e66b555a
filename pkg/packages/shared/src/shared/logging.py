"""Logging setup shared by the waveguide library and the lap CLI.

Library modules log through children of one root logger, ``waveguide-lap``,
obtained with :func:`get_logger`; only entry points call
:func:`configure_logging`, which attaches the single stdout handler.
"""

import json
import logging
import sys
from typing import Literal

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

ROOT_LOGGER = "waveguide-lap"

TEXT_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class JsonLineFormatter(logging.Formatter):
    """One JSON object per record; messages are escaped, exceptions included."""

    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, object] = {
            "time": self.formatTime(record, DATE_FORMAT),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str)


def configure_logging(
    level: LogLevel = "INFO",
    service_name: str | None = None,
    json_format: bool = False,
) -> logging.Logger:
    """
    Configure logging for a waveguide-lap entry point.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        service_name: Logger name to configure; defaults to the package root
            so that every ``waveguide-lap.*`` module logger inherits the handler
        json_format: If True, output one JSON object per line

    Returns:
        Configured logger instance

    Example:
        >>> logger = configure_logging("INFO")
        >>> logger.info("Solver started")
    """
    logger = logging.getLogger(service_name or ROOT_LOGGER)
    logger.setLevel(getattr(logging, level))
    logger.handlers.clear()

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(getattr(logging, level))
    formatter = JsonLineFormatter() if json_format else logging.Formatter(TEXT_FORMAT, datefmt=DATE_FORMAT)
    handler.setFormatter(formatter)
    logger.addHandler(handler)

    # Records stop at the package root
    logger.propagate = False

    return logger


def get_logger(name: str) -> logging.Logger:
    """Child of the package root, e.g. ``get_logger("fullguide")`` -> ``waveguide-lap.fullguide``."""
    if name == ROOT_LOGGER or name.startswith(f"{ROOT_LOGGER}."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")
