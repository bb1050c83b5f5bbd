"""Process-level settings for the simulator.

Experiment parameters live in the flat config files under ``configs/`` and are validated by
:class:`app.schemas.experiment.ExperimentConfig`. This module only covers how the process
runs: logging, the default output directory, worker threads, progress bars, metrics and
plots. Values come from the environment, after loading the first ``.env`` file that exists
for the current ``APP_ENV``.
"""

import os
import tomllib
from enum import Enum
from pathlib import Path
from typing import (
    Any,
    Dict,
    Optional,
)

from dotenv import load_dotenv

PROJECT_ROOT = Path(__file__).resolve().parents[2]


class Environment(str, Enum):
    """Where the simulator runs; selects the defaults in ENVIRONMENT_DEFAULTS."""

    DEVELOPMENT = "development"
    PRODUCTION = "production"
    TEST = "test"


def get_environment() -> Environment:
    match os.getenv("APP_ENV", "development").strip().lower():
        case "production" | "prod" | "batch":
            return Environment.PRODUCTION
        case "test" | "ci":
            return Environment.TEST
        case _:
            return Environment.DEVELOPMENT


def load_env_file(env: Environment) -> Optional[Path]:
    """Load the most specific env file present in the project root, if any."""
    candidates = (f".env.{env.value}.local", f".env.{env.value}", ".env.local", ".env")
    for name in candidates:
        path = PROJECT_ROOT / name
        if path.is_file():
            load_dotenv(dotenv_path=path)
            return path
    return None


def parse_list(value: str) -> list[str]:
    """Split a comma-separated value, stripping quotes and blanks."""
    value = value.strip("\"'")
    if "," not in value:
        return [value.strip()] if value.strip() else []
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_bool(value: str | None, default: bool = False) -> bool:
    """Interpret the usual truthy spellings of a flag."""
    if value is None:
        return default
    return value.strip().lower() in ("true", "1", "t", "yes", "y", "on")


def get_version_from_pyproject() -> str:
    try:
        with open(PROJECT_ROOT / "pyproject.toml", "rb") as f:
            return tomllib.load(f)["project"]["version"]
    except (OSError, KeyError, tomllib.TOMLDecodeError):
        return "0.0.1"


# applied only where the variable is not set explicitly
ENVIRONMENT_DEFAULTS: Dict[Environment, Dict[str, Any]] = {
    Environment.DEVELOPMENT: {
        "LOG_LEVEL": "DEBUG",
        "LOG_FORMAT": "console",
        "SHOW_PROGRESS": True,
    },
    Environment.PRODUCTION: {
        "LOG_LEVEL": "WARNING",
        "WORKERS": os.cpu_count() or 1,
    },
    Environment.TEST: {
        "LOG_FORMAT": "console",
        "SHOW_PROGRESS": False,
        "METRICS_ENABLED": False,
        "PLOTS_ENABLED": False,
    },
}


class Settings:
    """Process settings read once at import time."""

    def __init__(self):
        self.ENVIRONMENT = get_environment()
        self.ENV_FILE = load_env_file(self.ENVIRONMENT)

        self.PROJECT_NAME = os.getenv("PROJECT_NAME", "oam-linksim")
        self.VERSION = os.getenv("VERSION", get_version_from_pyproject())

        # Logging
        self.LOG_DIR = Path(os.getenv("LOG_DIR", "logs"))
        self.LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
        self.LOG_FORMAT = os.getenv("LOG_FORMAT", "json")  # "json" or "console"

        # Runs
        self.OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", "results"))
        self.WORKERS = max(1, int(os.getenv("WORKERS", "1")))
        self.SHOW_PROGRESS = parse_bool(os.getenv("SHOW_PROGRESS"), False)
        self.METRICS_ENABLED = parse_bool(os.getenv("METRICS_ENABLED"), True)
        self.PLOTS_ENABLED = parse_bool(os.getenv("PLOTS_ENABLED"), False)

        for key, value in ENVIRONMENT_DEFAULTS[self.ENVIRONMENT].items():
            if key not in os.environ:
                setattr(self, key, value)


settings = Settings()
