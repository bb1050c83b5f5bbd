"""This file contains the channel ensemble schemas."""

import math

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    model_validator,
)


class FrequencyGrid(BaseModel):
    """Uniform, strictly increasing frequency grid.

    Attributes:
        start_hz: First frequency point.
        step_hz: Spacing between points.
        count: Number of points.
    """

    model_config = ConfigDict(frozen=True)

    start_hz: float = Field(default=5.0e9, allow_inf_nan=False, description="First frequency (Hz)")
    step_hz: float = Field(default=1.0e6, gt=0, allow_inf_nan=False, description="Frequency step (Hz)")
    count: int = Field(default=201, ge=2, description="Number of frequency points")

    @property
    def frequencies(self) -> np.ndarray:
        """Frequency points in Hz."""
        return self.start_hz + self.step_hz * np.arange(self.count)

    @property
    def span_hz(self) -> float:
        """Distance between the first and the last point."""
        return self.step_hz * (self.count - 1)

    @property
    def impulse_period_s(self) -> float:
        """Sample period of the impulse response obtained by an inverse DFT over the grid."""
        return 1.0 / (self.count * self.step_hz)

    def matches(self, other: "FrequencyGrid") -> bool:
        """Whether two grids describe the same frequency points."""
        return (
            self.count == other.count
            and math.isclose(self.start_hz, other.start_hz, rel_tol=1e-12, abs_tol=1e-6)
            and math.isclose(self.step_hz, other.step_hz, rel_tol=1e-9)
        )


class StirringPlan(BaseModel):
    """Mechanical stirring sequence of the chamber (platform x stirrer states)."""

    model_config = ConfigDict(frozen=True)

    platform_states: int = Field(default=20, gt=0)
    stirrer_states: int = Field(default=20, gt=0)

    @property
    def total_samples(self) -> int:
        """Number of independent channel realizations."""
        return self.platform_states * self.stirrer_states


class PowerDelayProfile(BaseModel):
    """Exponentially decaying tapped-delay-line power profile.

    The default reproduces a ~2 MHz coherence bandwidth at the 0.5 threshold
    and a 640 ns span equal to the cyclic prefix duration.
    """

    model_config = ConfigDict(frozen=True)

    tap_spacing_s: float = Field(default=5.0e-9, gt=0, allow_inf_nan=False)
    tap_count: int = Field(default=128, gt=0)
    decay_constant_s: float = Field(default=137.8e-9, gt=0, allow_inf_nan=False)

    @property
    def span_s(self) -> float:
        """Total delay span covered by the taps."""
        return self.tap_count * self.tap_spacing_s

    def delays_s(self) -> np.ndarray:
        """Tap delays."""
        return self.tap_spacing_s * np.arange(self.tap_count)

    def powers(self) -> np.ndarray:
        """Tap powers normalized to unit sum."""
        p = np.exp(-self.delays_s() / self.decay_constant_s)
        return p / p.sum()

    def rms_delay_spread_s(self) -> float:
        """RMS delay spread of the discrete profile."""
        p = self.powers()
        tau = self.delays_s()
        mean = float(np.sum(p * tau))
        return math.sqrt(max(float(np.sum(p * tau**2)) - mean**2, 0.0))


class ChannelSet(BaseModel):
    """Frequency-domain MIMO channel ensemble H[s, f, r, t].

    Attributes:
        grid: Frequency grid of the second axis.
        n_rx: Receive antennas.
        n_tx: Transmit antennas.
        samples: Complex array of shape (S, grid.count, n_rx, n_tx).
        label: Free text, e.g. "with_oam" or "without_oam".
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: FrequencyGrid
    n_rx: int = Field(..., gt=0)
    n_tx: int = Field(..., gt=0)
    samples: np.ndarray
    label: str = "without_oam"

    @model_validator(mode="after")
    def validate_samples(self) -> "ChannelSet":
        """Check shape consistency and finiteness."""
        expected = (self.grid.count, self.n_rx, self.n_tx)
        if self.samples.ndim != 4 or self.samples.shape[1:] != expected or self.samples.shape[0] < 1:
            raise ValueError(
                f"samples shape {self.samples.shape} does not match "
                f"(S>=1, {expected[0]}, {expected[1]}, {expected[2]})"
            )
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("channel samples contain NaN or infinite values")
        return self

    @property
    def n_samples(self) -> int:
        """Number of stirring samples S."""
        return int(self.samples.shape[0])

    def with_samples(self, samples: np.ndarray, label: str | None = None) -> "ChannelSet":
        """Copy of this set carrying new samples (same grid and dimensions)."""
        n_rx, n_tx = samples.shape[2], samples.shape[3]
        return ChannelSet(
            grid=self.grid,
            n_rx=n_rx,
            n_tx=n_tx,
            samples=samples,
            label=self.label if label is None else label,
        )


class ImpulseSet(BaseModel):
    """Impulse responses h[s, k, r, t] derived from a ChannelSet."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sample_period_s: float = Field(..., gt=0)
    taps: np.ndarray
    label: str = "without_oam"

    @property
    def n_taps(self) -> int:
        """Impulse length L."""
        return int(self.taps.shape[1])

    @property
    def delays_s(self) -> np.ndarray:
        """Delay of every tap."""
        return self.sample_period_s * np.arange(self.n_taps)
