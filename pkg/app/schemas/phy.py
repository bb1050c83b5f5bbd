"""This file contains the modem schemas: constellation and OFDM parameters."""

import math
from functools import lru_cache
from typing import Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    model_validator,
)


def gray_to_binary(label: int) -> int:
    """Position of a Gray label along its axis."""
    index = label
    while label := label >> 1:
        index ^= label
    return index


@lru_cache(maxsize=None)
def _axis_tables(order: int) -> tuple[np.ndarray, np.ndarray]:
    side = math.isqrt(order)
    scale = math.sqrt(2.0 * (order - 1) / 3.0)
    levels = (2.0 * np.arange(side) - (side - 1)) / scale
    # level reached by each per-axis label, in label order
    label_levels = levels[[gray_to_binary(g) for g in range(side)]]
    levels.setflags(write=False)
    label_levels.setflags(write=False)
    return levels, label_levels


@lru_cache(maxsize=None)
def _points(order: int) -> np.ndarray:
    _, label_levels = _axis_tables(order)
    side = label_levels.size
    index = np.arange(order)
    points = label_levels[index // side] + 1j * label_levels[index % side]
    points.setflags(write=False)
    return points


class Constellation(BaseModel):
    """Gray-coded square QAM constellation with unit average energy.

    The first half of each symbol's bits selects the in-phase level and the second half
    the quadrature level, each axis Gray-coded. Symbol index = (I label << b) | Q label.
    """

    model_config = ConfigDict(frozen=True)

    order: Literal[4, 16, 64] = 64

    @property
    def bits_per_symbol(self) -> int:
        """log2(order)."""
        return int(math.log2(self.order))

    @property
    def bits_per_axis(self) -> int:
        """Bits carried by each of the I and Q axes."""
        return self.bits_per_symbol // 2

    @property
    def side(self) -> int:
        """Levels per axis."""
        return math.isqrt(self.order)

    @property
    def levels(self) -> np.ndarray:
        """Per-axis amplitude levels in increasing order."""
        return _axis_tables(self.order)[0]

    @property
    def label_levels(self) -> np.ndarray:
        """Per-axis amplitude level for each Gray label 0..side-1."""
        return _axis_tables(self.order)[1]

    @property
    def points(self) -> np.ndarray:
        """Complex points indexed by symbol index."""
        return _points(self.order)

    @property
    def min_distance(self) -> float:
        """Minimum Euclidean distance between points."""
        return float(self.levels[1] - self.levels[0])


class OfdmConfig(BaseModel):
    """OFDM modem parameters. All subcarriers carry data."""

    model_config = ConfigDict(frozen=True)

    n_subcarriers: int = Field(default=512, gt=0)
    cp_len: int = Field(default=128, ge=0)
    sample_rate_hz: float = Field(default=2.0e8, gt=0, allow_inf_nan=False)
    n_streams: int = Field(default=2, gt=0)

    @model_validator(mode="after")
    def validate_cp(self) -> "OfdmConfig":
        """The cyclic prefix must be shorter than the symbol."""
        if self.cp_len >= self.n_subcarriers:
            raise ValueError(f"cp_len ({self.cp_len}) must be smaller than n_subcarriers ({self.n_subcarriers})")
        return self

    @property
    def symbol_len(self) -> int:
        """Time samples per OFDM symbol including the cyclic prefix."""
        return self.n_subcarriers + self.cp_len

    @property
    def cp_duration_s(self) -> float:
        """Cyclic prefix duration."""
        return self.cp_len / self.sample_rate_hz


class OfdmFrame(BaseModel):
    """Time-domain OFDM frame together with its subcarrier symbols.

    Leading batch axes are allowed: symbols (..., n_streams, n_subcarriers),
    time_samples (..., n_streams, n_subcarriers + cp_len).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    symbols: np.ndarray
    time_samples: np.ndarray
