"""This file contains the command-line entry point.

Usage:
    oam-linksim [--config FILE] [--seed N] [--out DIR] [--workers N] VERB

Verbs: synth, ingest, capacity, ber, correlation, coherence, run.
Exit codes: 0 success, 2 configuration error, 3 data-format error, 4 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import (
    Any,
    Dict,
    Optional,
    Sequence,
)

from dotenv import dotenv_values
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import ConfigError, LinkSimError
from app.core.logging import bind_run, logger
from app.schemas.experiment import ExperimentConfig
from app.services.experiment import ExperimentService
from app.utils.file_utils import remove_file, write_text

VERBS = {
    "synth": "Synthesize both channel ensembles and export them as CSV",
    "ingest": "Ingest measured channel files, normalize them and export them as CSV",
    "capacity": "Write capacity.csv",
    "ber": "Write ber.csv",
    "correlation": "Write correlation.csv",
    "coherence": "Write coherence.csv",
    "run": "Full pipeline: every table plus summary.json",
}


def _add_global_flags(parser: argparse.ArgumentParser, default: Any) -> None:
    parser.add_argument("--config", type=Path, default=default, help="Flat key=value experiment config file")
    parser.add_argument("--seed", type=int, default=default, help="Master seed (overrides the config file)")
    parser.add_argument("--out", type=Path, default=default, help="Output directory (overrides the config file)")
    parser.add_argument("--workers", type=int, default=default, help="Threads for the link runner")
    parser.add_argument("--plots", action="store_true", default=default, help="Render SVG figures")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser; global flags are accepted before or after the verb."""
    parser = argparse.ArgumentParser(
        prog="oam-linksim",
        description="OAM vs. conventional MIMO-OFDM links in a reverberation chamber",
    )
    _add_global_flags(parser, None)
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, argparse.SUPPRESS)
    subparsers = parser.add_subparsers(dest="command", required=True, help="Command to run")
    for verb, help_text in VERBS.items():
        subparsers.add_parser(verb, help=help_text, parents=[common])
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the config file with command-line overrides.

    Raises:
        ConfigError: If the config file does not exist or holds unknown keys.
        pydantic.ValidationError: If values are invalid.
    """
    values: Dict[str, Optional[str]] = {}
    if args.config is not None:
        if not args.config.is_file():
            raise ConfigError(f"config file {args.config} not found", config=str(args.config))
        values = dict(dotenv_values(args.config))

    overrides: Dict[str, Any] = {"seed": args.seed, "output_dir": args.out}
    if args.plots:
        overrides["plots"] = True
    if args.command == "synth":
        overrides["mode"] = "synthesize"
    elif args.command == "ingest":
        overrides["mode"] = "ingest"
    return ExperimentConfig.from_flat(values, **overrides)


def validation_record(exc: ValidationError) -> Dict[str, Any]:
    """Error record for pydantic validation failures."""
    formatted_errors = []
    for error in exc.errors():
        loc = " -> ".join(str(loc_part) for loc_part in error["loc"])
        formatted_errors.append({"field": loc, "message": error["msg"]})
    return {
        "detail": "Validation error",
        "error_type": "ValidationError",
        "exit_code": ConfigError.exit_code,
        "errors": formatted_errors,
    }


def execute(command: str, service: ExperimentService) -> None:
    """Dispatch a verb to the experiment service."""
    if command in ("synth", "ingest"):
        service.export_channels()
    elif command == "run":
        service.run()
    else:
        getattr(service, command)()


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return the process exit code."""
    args = build_parser().parse_args(argv)
    bind_run(args.command, args.seed)
    out_dir: Path = args.out or settings.OUTPUT_DIR
    try:
        config = load_config(args)
        out_dir = config.output_dir
        bind_run(args.command, config.seed)
        logger.info("command_started", output_dir=str(out_dir))
        execute(args.command, ExperimentService(config, workers=args.workers))
    except LinkSimError as e:
        logger.error("command_failed", error=e.message, exc_info=True)
        record = e.to_record()
    except ValidationError as e:
        logger.error("validation_error", errors=str(e.errors()))
        record = validation_record(e)
    except OSError as e:
        logger.error("command_failed", error=str(e), exc_info=True)
        record = ConfigError(f"cannot access {e.filename}: {e.strerror}", path=str(e.filename)).to_record()
    else:
        remove_file(out_dir / "error.json")
        logger.info("command_complete", output_dir=str(out_dir))
        return 0

    text = json.dumps(record, indent=2, default=str)
    print(text, file=sys.stderr)
    try:
        write_text(out_dir / "error.json", text)
    except OSError:
        logger.warning("error_record_not_written", output_dir=str(out_dir))
    return record["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
