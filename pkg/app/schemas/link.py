"""This file contains the schemas for link-level results."""

import math

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    computed_field,
)


class SnrPoint(BaseModel):
    """Reference SNR gamma. gamma_db = +inf disables noise."""

    model_config = ConfigDict(frozen=True)

    gamma_db: float = Field(..., description="Reference SNR (dB)")

    @computed_field
    @property
    def gamma_linear(self) -> float:
        """Linear reference SNR."""
        return math.inf if math.isinf(self.gamma_db) and self.gamma_db > 0 else 10.0 ** (self.gamma_db / 10.0)

    @property
    def noiseless(self) -> bool:
        """True for the +inf sentinel."""
        return math.isinf(self.gamma_db) and self.gamma_db > 0


class CapacityCurve(BaseModel):
    """Ergodic capacity per frequency."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frequencies: np.ndarray
    capacity_bps_hz: np.ndarray
    gamma_db: float
    label: str

    @property
    def mean(self) -> float:
        """Capacity averaged over frequency."""
        return float(np.mean(self.capacity_bps_hz))


class LinkResult(BaseModel):
    """Outcome of one Monte-Carlo OFDM link run at a single SNR."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gamma_db: float
    total_bits: int = Field(..., ge=0)
    error_bits: int = Field(..., ge=0)
    sample_ber: np.ndarray
    singular_subcarriers: int = Field(default=0, ge=0)
    impulse_energy_kept: float = Field(default=1.0, ge=0, le=1)
    label: str = "without_oam"

    @computed_field
    @property
    def ber(self) -> float:
        """Error bits over transmitted bits."""
        return self.error_bits / self.total_bits if self.total_bits else math.nan

    @property
    def mean_sample_ber(self) -> float:
        """BER computed per channel sample, then averaged over samples."""
        return float(np.mean(self.sample_ber))

    @property
    def ber_std_error(self) -> float:
        """Standard error of the per-sample BER mean."""
        n = self.sample_ber.size
        if n < 2:
            return 0.0
        return float(np.std(self.sample_ber, ddof=1) / math.sqrt(n))
