"""Channel file ingestion and export."""

import numpy as np
import pytest

from app.core.exceptions import (
    DataFormatError,
    DuplicateRowError,
    MalformedRowError,
    MissingTupleError,
    NonFiniteValueError,
    NonUniformGridError,
)
from app.services.channel_io import export_channel_csv, ingest_channel_csv
from tests.data import CHANNEL_FIXTURE, fixture_text


def _variant(tmp_path, text: str):
    path = tmp_path / "channel.csv"
    path.write_text(text, encoding="utf-8")
    return path


def _replace_line(index: int, line: str) -> str:
    lines = fixture_text().splitlines()
    lines[index] = line
    return "\n".join(lines) + "\n"


def test_fixture_is_read_into_dense_array():
    channel = ingest_channel_csv(CHANNEL_FIXTURE)
    assert channel.samples.shape == (2, 3, 1, 2)
    assert channel.grid.start_hz == 5.0e9
    assert channel.grid.step_hz == pytest.approx(1.0e6)
    assert channel.label == "without_oam"
    assert channel.samples[0, 0, 0, 1] == 0.5 - 0.5j
    assert channel.samples[1, 1, 0, 0] == 2.0 - 3.0j
    assert channel.samples[1, 2, 0, 1] == 1.5 + 1.5j


def test_row_order_does_not_matter(tmp_path):
    header, *rows = fixture_text().splitlines()
    shuffled = _variant(tmp_path, "\n".join([header, *reversed(rows)]) + "\n")
    np.testing.assert_array_equal(ingest_channel_csv(shuffled).samples, ingest_channel_csv(CHANNEL_FIXTURE).samples)


def test_export_then_ingest_is_exact(small_ensemble, tmp_path):
    path = tmp_path / "out" / "channel.csv"
    export_channel_csv(small_ensemble, path)
    restored = ingest_channel_csv(path, label="restored")
    np.testing.assert_array_equal(restored.samples, small_ensemble.samples)
    assert restored.grid.matches(small_ensemble.grid)
    assert restored.label == "restored"
    assert path.read_text(encoding="utf-8").splitlines()[0] == "freq_hz,sample,rx,tx,re,im"


def test_missing_tuple_is_named(tmp_path):
    lines = fixture_text().splitlines()
    del lines[8]
    with pytest.raises(MissingTupleError) as exc_info:
        ingest_channel_csv(_variant(tmp_path, "\n".join(lines) + "\n"))
    assert "(5001000000.0, 1, 0, 1)" in str(exc_info.value)
    assert exc_info.value.exit_code == 3


def test_duplicate_row(tmp_path):
    with pytest.raises(DuplicateRowError):
        ingest_channel_csv(_variant(tmp_path, fixture_text() + "5001000000,0,0,1,9.0,9.0\n"))


def test_non_uniform_grid(tmp_path):
    text = fixture_text().replace("5002000000,", "5002500000,")
    with pytest.raises(NonUniformGridError):
        ingest_channel_csv(_variant(tmp_path, text))


def test_non_finite_value(tmp_path):
    with pytest.raises(NonFiniteValueError):
        ingest_channel_csv(_variant(tmp_path, _replace_line(3, "5000000000,1,0,0,nan,2.0")))


def test_wrong_header(tmp_path):
    with pytest.raises(MalformedRowError):
        ingest_channel_csv(_variant(tmp_path, _replace_line(0, "frequency,sample,rx,tx,re,im")))


@pytest.mark.parametrize(
    "line",
    [
        "5000000000,1,0,0,abc,2.0",
        "5000000000,1,0,0,1.0",
        "5000000000,1,-1,0,1.0,2.0",
    ],
)
def test_malformed_rows(tmp_path, line):
    with pytest.raises(MalformedRowError):
        ingest_channel_csv(_variant(tmp_path, _replace_line(3, line)))


def test_errors_are_data_format_errors(tmp_path):
    with pytest.raises(DataFormatError) as exc_info:
        ingest_channel_csv(_variant(tmp_path, "freq_hz,sample,rx,tx,re,im\n"))
    record = exc_info.value.to_record()
    assert record["exit_code"] == 3
    assert record["error_type"] == "MalformedRowError"


def test_invalid_utf8_names_the_row(tmp_path):
    path = tmp_path / "channel.csv"
    lines = fixture_text().encode("utf-8").splitlines(keepends=True)
    lines[3] = b"5000000000,1,0,0,\xff\xfe,2.0\n"
    path.write_bytes(b"".join(lines))
    with pytest.raises(MalformedRowError) as exc_info:
        ingest_channel_csv(path)
    assert exc_info.value.context["row"] == 4
    assert exc_info.value.exit_code == 3


def test_nul_byte_is_malformed(tmp_path):
    path = tmp_path / "channel.csv"
    path.write_bytes(fixture_text().encode("utf-8") + b"1\x00\n")
    with pytest.raises(MalformedRowError):
        ingest_channel_csv(path)


def test_byte_order_mark_is_accepted(tmp_path):
    path = tmp_path / "channel.csv"
    path.write_bytes(b"\xef\xbb\xbf" + fixture_text().encode("utf-8"))
    np.testing.assert_array_equal(ingest_channel_csv(path).samples, ingest_channel_csv(CHANNEL_FIXTURE).samples)
