"""This file contains the utilities for the application."""

from .file_utils import (
    create_dir,
    write_csv,
    write_text,
)

__all__ = ["create_dir", "write_csv", "write_text"]
