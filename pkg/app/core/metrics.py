"""Prometheus metrics for simulation runs.

Instruments live on a private registry so that repeated runs inside one process
(tests, notebooks) do not collide with the default global registry.
"""

import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

registry = CollectorRegistry()

stage_duration_seconds = Histogram(
    "linksim_stage_duration_seconds",
    "Wall time spent in a simulation stage",
    ["stage"],
    buckets=(0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 30.0, 60.0, 300.0),
    registry=registry,
)

channel_samples_total = Counter(
    "linksim_channel_samples_total",
    "Channel samples pushed through the OFDM link",
    ["system"],
    registry=registry,
)

singular_subcarriers_total = Counter(
    "linksim_singular_subcarriers_total",
    "Subcarriers excluded from BER because zero-forcing was ill-conditioned",
    ["system"],
    registry=registry,
)

bit_errors_total = Counter(
    "linksim_bit_errors_total",
    "Bit errors counted by the link runner",
    ["system"],
    registry=registry,
)


@contextmanager
def track_stage(stage: str) -> Iterator[None]:
    """Time a block and record it under the given stage label."""
    start_time = time.perf_counter()
    try:
        yield
    finally:
        stage_duration_seconds.labels(stage=stage).observe(time.perf_counter() - start_time)


def export_metrics(path: Path) -> None:
    """Write the registry in Prometheus text format."""
    write_to_textfile(str(path), registry)
