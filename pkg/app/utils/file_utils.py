"""Utility functions for file operations such as writing result tables."""

import csv
import os
from pathlib import Path
from typing import Iterable, Sequence

from app.core.logging import logger


def create_dir(path: os.PathLike):
    """Create a directory for the given path if it does not exist.

    Parameters
    ----------
    path : os.PathLike
        The path for which to create the directory.

    Returns.
    -------
    bool
        True if the directory was created or already exists.
    """
    path = to_path(path).absolute()
    try:
        path.mkdir(parents=True, exist_ok=True)
        return True
    except Exception as e:
        logger.error("failed_to_create_folder", folder=str(path), error=str(e), exc_info=True)
        raise e


def format_value(value) -> str:
    """Locale-independent text for a table cell; floats use 12 significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(file_path: os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a table with a header row and "\\n" line endings.

    Parameters
    ----------
    file_path : os.PathLike
        Destination file; parent directories are created.
    header : Sequence[str]
        Column names.
    rows : Iterable[Sequence]
        Row values; numpy scalars are converted to Python floats first.

    Returns.
    -------
    Path
        The written path.
    """
    file_path = to_path(file_path)
    create_dir(file_path.parent)
    try:
        with file_path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v.item() if hasattr(v, "item") else v) for v in row])
    except Exception as e:
        logger.error("failed_to_write_csv", file=str(file_path), error=str(e), exc_info=True)
        raise e
    return file_path


def write_text(file_path: os.PathLike, content: str) -> Path:
    """Write a UTF-8 text file with a trailing newline."""
    file_path = to_path(file_path)
    create_dir(file_path.parent)
    file_path.write_text(content if content.endswith("\n") else content + "\n", encoding="utf-8")
    return file_path


def remove_file(file_path: os.PathLike) -> bool:
    """Delete a file by its path if it exists."""
    try:
        to_path(file_path).unlink(missing_ok=True)
        return True
    except Exception as e:
        logger.error("failed_to_delete_file", file=str(file_path), error=str(e), exc_info=True)
        raise e


def to_path(p: os.PathLike) -> Path:
    """Coerce a path-like to Path."""
    if not isinstance(p, Path):
        p = Path(p)
    return p
