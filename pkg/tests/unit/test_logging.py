"""Run context binding and field conversion in the structlog setup."""

import json
import logging

import numpy as np
import structlog

from app.core.logging import JsonlFileHandler, bind_run, logger, numpy_to_builtin


def test_bind_run_replaces_previous_context():
    structlog.contextvars.bind_contextvars(stale="value")
    bind_run("capacity", 7)
    assert structlog.contextvars.get_contextvars() == {"command": "capacity", "seed": 7}
    structlog.contextvars.clear_contextvars()


def test_numpy_scalars_become_builtin():
    event = numpy_to_builtin(None, "info", {"event": "x", "ber": np.float64(0.25), "errors": np.int64(3)})
    assert type(event["ber"]) is float
    assert type(event["errors"]) is int


def test_jsonl_handler_writes_one_object_per_record(tmp_path):
    path = tmp_path / "run.jsonl"
    handler = JsonlFileHandler(path)
    record = logging.LogRecord("linksim", logging.INFO, __file__, 1, "capacity %s", (np.float64(1.5),), None)
    handler.emit(record)
    handler.emit(record)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    entry = json.loads(lines[0])
    assert entry["message"] == "capacity 1.5"
    assert entry["level"] == "INFO"
    assert entry["environment"] == "test"


def test_logger_accepts_numpy_fields():
    logger.info("numpy_fields_logged", ber=np.float64(1e-3), shape=np.arange(3))
