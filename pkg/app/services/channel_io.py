"""Channel transfer-function files.

One CSV row per (frequency, stirring sample, rx, tx) with header
``freq_hz,sample,rx,tx,re,im``. Values are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

import csv
import io
import math
import os
from pathlib import Path
from typing import Dict, Iterator, Tuple

import numpy as np

from app.core.exceptions import (
    DuplicateRowError,
    MalformedRowError,
    MissingTupleError,
    NonFiniteValueError,
    NonUniformGridError,
)
from app.core.logging import logger
from app.schemas.channel import ChannelSet, FrequencyGrid
from app.utils.file_utils import create_dir, to_path

HEADER = ["freq_hz", "sample", "rx", "tx", "re", "im"]
GRID_TOLERANCE = 1e-6


def _parse_row(row: list[str], line: int) -> Tuple[float, int, int, int, complex]:
    if len(row) != len(HEADER):
        raise MalformedRowError(f"row {line} has {len(row)} columns, expected {len(HEADER)}", row=line)
    try:
        freq = float(row[0])
        sample, rx, tx = int(row[1]), int(row[2]), int(row[3])
        re, im = float(row[4]), float(row[5])
    except ValueError as e:
        raise MalformedRowError(f"row {line} cannot be parsed: {e}", row=line) from e
    if min(sample, rx, tx) < 0:
        raise MalformedRowError(f"row {line} has a negative index", row=line)
    if not (math.isfinite(freq) and math.isfinite(re) and math.isfinite(im)):
        raise NonFiniteValueError(f"row {line} holds a non-finite value", row=line)
    return freq, sample, rx, tx, complex(re, im)


def _infer_grid(frequencies: np.ndarray, first_rows: Dict[float, int]) -> FrequencyGrid:
    if frequencies.size < 2:
        raise NonUniformGridError(f"need at least 2 distinct frequencies, got {frequencies.size}")
    step = (frequencies[-1] - frequencies[0]) / (frequencies.size - 1)
    deviation = np.abs(np.diff(frequencies) - step)
    bad = np.flatnonzero(deviation > GRID_TOLERANCE * step)
    if bad.size:
        freq = float(frequencies[bad[0] + 1])
        raise NonUniformGridError(
            f"frequency {freq:.17g} Hz (row {first_rows[freq]}) breaks the uniform grid of step {step:.6g} Hz",
            row=first_rows[freq],
            freq_hz=freq,
        )
    return FrequencyGrid(start_hz=float(frequencies[0]), step_hz=float(step), count=int(frequencies.size))


def _decode(path: Path) -> str:
    data = path.read_bytes()
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        line = data[: e.start].count(b"\n") + 1
        raise MalformedRowError(f"row {line} is not valid UTF-8 (byte {e.start})", row=line, path=str(path)) from e


def _read_rows(path: Path) -> Iterator[Tuple[int, list[str]]]:
    """Yield (line, row) pairs of the data rows after checking the header."""
    reader = csv.reader(io.StringIO(_decode(path), newline=""))
    try:
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise MalformedRowError(f"row 1 must be the header {','.join(HEADER)}", row=1, path=str(path))
        for row in reader:
            if row:
                yield reader.line_num, row
    except csv.Error as e:
        line = max(reader.line_num, 1)
        raise MalformedRowError(f"row {line} cannot be read: {e}", row=line, path=str(path)) from e


def ingest_channel_csv(path: os.PathLike, label: str = "without_oam") -> ChannelSet:
    """Read a channel file into a dense ChannelSet.

    The grid and the dimensions are inferred from the rows; every
    (frequency, sample, rx, tx) tuple must appear exactly once.

    Raises:
        MalformedRowError: Wrong header, column count or number syntax, undecodable bytes or broken quoting.
        NonFiniteValueError: NaN or infinite entries.
        DuplicateRowError: A tuple appears twice.
        NonUniformGridError: Frequencies are not uniformly spaced.
        MissingTupleError: A tuple of the Cartesian product is absent.
    """
    path = to_path(path)
    entries: Dict[Tuple[float, int, int, int], complex] = {}
    first_rows: Dict[float, int] = {}

    for line, row in _read_rows(path):
        freq, sample, rx, tx, value = _parse_row(row, line)
        key = (freq, sample, rx, tx)
        if key in entries:
            raise DuplicateRowError(f"row {line} repeats tuple {key}", row=line, tuple=key)
        entries[key] = value
        first_rows.setdefault(freq, line)

    if not entries:
        raise MalformedRowError("file has no data rows", path=str(path))

    keys = np.array([k[1:] for k in entries], dtype=np.int64)
    frequencies = np.array(sorted(first_rows))
    grid = _infer_grid(frequencies, first_rows)
    n_samples, n_rx, n_tx = (keys.max(axis=0) + 1).tolist()

    expected = grid.count * n_samples * n_rx * n_tx
    if len(entries) != expected:
        for freq in frequencies:
            for index in np.ndindex(n_samples, n_rx, n_tx):
                if (float(freq), *index) not in entries:
                    missing = (float(freq), *index)
                    raise MissingTupleError(f"tuple (freq_hz, sample, rx, tx) = {missing} is missing", tuple=missing)

    freq_index = {float(freq): fi for fi, freq in enumerate(frequencies)}
    samples = np.empty((n_samples, grid.count, n_rx, n_tx), dtype=complex)
    for (freq, sample, rx, tx), value in entries.items():
        samples[sample, freq_index[freq], rx, tx] = value

    logger.info(
        "channel_csv_ingested",
        path=str(path),
        n_samples=n_samples,
        grid_count=grid.count,
        n_rx=n_rx,
        n_tx=n_tx,
    )
    return ChannelSet(grid=grid, n_rx=n_rx, n_tx=n_tx, samples=samples, label=label)


def export_channel_csv(channel: ChannelSet, path: os.PathLike) -> None:
    """Write a ChannelSet in the ingestion format, ordered by frequency, sample, rx, tx."""
    path = to_path(path)
    create_dir(path.parent)
    frequencies = channel.grid.frequencies
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HEADER)
        for fi, freq in enumerate(frequencies):
            for s, r, t in np.ndindex(channel.n_samples, channel.n_rx, channel.n_tx):
                value = channel.samples[s, fi, r, t]
                writer.writerow([f"{freq:.17g}", s, r, t, f"{value.real:.17g}", f"{value.imag:.17g}"])
    logger.info("channel_csv_exported", path=str(path), label=channel.label, rows=channel.samples.size)
