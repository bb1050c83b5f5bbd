"""This file contains the schemas for post-processed statistics."""

from typing import Literal, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
)


class CorrelationCurve(BaseModel):
    """Complex correlation magnitude between two branches, per frequency."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frequencies: np.ndarray
    magnitude: np.ndarray
    side: Literal["transmit", "receive"]
    pair: Tuple[int, int]
    label: str = ""

    @property
    def mean(self) -> float:
        """Magnitude averaged over frequency."""
        return float(np.mean(self.magnitude))


class BerFitResult(BaseModel):
    """Least-squares fit of log BER = log K + slope * log gamma."""

    model_config = ConfigDict(frozen=True)

    k_constant: float
    slope: float
    range_db: Tuple[float, float]
    residual: float
    n_points: int

    def reference(self, gamma_linear: np.ndarray) -> np.ndarray:
        """The K / gamma reference curve."""
        return self.k_constant / np.asarray(gamma_linear, dtype=float)


class CoherenceResult(BaseModel):
    """Coherence bandwidth at a correlation threshold.

    When |R| never crosses the threshold inside the grid span, bandwidth_hz is the span
    and lower_bound is set.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    bandwidth_hz: float
    threshold: float
    lower_bound: bool
    lags_hz: np.ndarray
    magnitude: np.ndarray
