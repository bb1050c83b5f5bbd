"""Structured logging for the simulator.

Every record goes to a daily JSONL file under ``settings.LOG_DIR`` and to stderr, either as
pretty console lines or as JSON. stdout stays free for command output. Records emitted while
a command runs carry its verb and master seed, bound with :func:`bind_run`.
"""

import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import (
    Any,
    Dict,
    List,
)

import numpy as np
import structlog

from app.core.config import (
    Environment,
    settings,
)

settings.LOG_DIR.mkdir(parents=True, exist_ok=True)

# third-party loggers that are chatty at DEBUG
QUIET_LOGGERS = ("matplotlib", "PIL")


def get_log_file_path() -> Path:
    """Daily log file, prefixed with the environment name."""
    return settings.LOG_DIR / f"{settings.ENVIRONMENT.value}-{datetime.now():%Y-%m-%d}.jsonl"


def _to_builtin(value: Any) -> Any:
    """JSON fallback for numpy scalars and arrays that end up in log fields."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    return repr(value)


class JsonlFileHandler(logging.Handler):
    """Appends one JSON object per record to a file."""

    def __init__(self, file_path: Path):
        super().__init__()
        self.file_path = file_path

    def emit(self, record: logging.LogRecord) -> None:
        try:
            entry: Dict[str, Any] = {
                "timestamp": datetime.fromtimestamp(record.created).isoformat(),
                "level": record.levelname,
                "logger": record.name,
                "message": record.getMessage(),
                "environment": settings.ENVIRONMENT.value,
            }
            with open(self.file_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry, default=_to_builtin) + "\n")
        except Exception:
            self.handleError(record)


def add_environment(_: Any, __: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    event_dict["environment"] = settings.ENVIRONMENT.value
    return event_dict


def numpy_to_builtin(_: Any, __: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Turn numpy scalars into plain numbers so both renderers print them cleanly."""
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
    return event_dict


def get_structlog_processors(with_callsite: bool) -> List[Any]:
    """Processor chain shared by the console and JSON renderers.

    Args:
        with_callsite: Add function name and line number to every event.
    """
    processors: List[Any] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        numpy_to_builtin,
    ]
    if with_callsite:
        processors.append(
            structlog.processors.CallsiteParameterAdder(
                {
                    structlog.processors.CallsiteParameter.MODULE,
                    structlog.processors.CallsiteParameter.FUNC_NAME,
                    structlog.processors.CallsiteParameter.LINENO,
                }
            )
        )
    processors.append(add_environment)
    return processors


def bind_run(command: str, seed: int | None = None) -> None:
    """Attach the running verb and master seed to every following log event."""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(command=command, seed=seed)


def setup_logging() -> None:
    """Route stdlib logging to the JSONL file and stderr, then configure structlog on top."""
    file_handler = JsonlFileHandler(get_log_file_path())
    console_handler = logging.StreamHandler(sys.stderr)
    for handler in (file_handler, console_handler):
        handler.setLevel(settings.LOG_LEVEL)

    logging.basicConfig(
        format="%(message)s",
        level=settings.LOG_LEVEL,
        handlers=[file_handler, console_handler],
    )
    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    renderer = (
        structlog.dev.ConsoleRenderer()
        if settings.LOG_FORMAT == "console"
        else structlog.processors.JSONRenderer(default=_to_builtin)
    )
    structlog.configure(
        processors=[
            *get_structlog_processors(with_callsite=settings.ENVIRONMENT != Environment.PRODUCTION),
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


setup_logging()

logger = structlog.get_logger()
logger.debug("logging_initialized", log_level=settings.LOG_LEVEL, log_format=settings.LOG_FORMAT)
