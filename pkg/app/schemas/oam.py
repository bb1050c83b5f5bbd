"""This file contains the schemas describing the OAM metasurfaces."""

from typing import List

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
)


class OamModeSpec(BaseModel):
    """Metasurface set in front of the transmit horns.

    Attributes:
        modes: Topological charges, one per transmit antenna.
        insertion_loss_db: Power loss of the metasurfaces.
        frequency_dependent: Whether the mixing varies smoothly over the grid.
    """

    model_config = ConfigDict(frozen=True)

    modes: List[int] = Field(default_factory=lambda: [1, 2], min_length=1)
    insertion_loss_db: float = Field(default=2.0, ge=0, allow_inf_nan=False)
    frequency_dependent: bool = True

    @field_validator("modes")
    @classmethod
    def validate_modes(cls, v: List[int]) -> List[int]:
        """Modes must be distinct."""
        if len(set(v)) != len(v):
            raise ValueError(f"OAM modes must be distinct, got {v}")
        return v

    @property
    def n_tx(self) -> int:
        """Transmit antennas implied by the mode list."""
        return len(self.modes)


class MixingMatrix(BaseModel):
    """Transmit-side mixing M(f) with an amplitude loss factor.

    Attributes:
        matrices: Unitary matrices of shape (F, n, n); F == 1 for a frequency-flat matrix.
        loss_scalar: Amplitude factor 10^(-loss_dB/20).
        modes: Metadata labels of the generating modes.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrices: np.ndarray
    loss_scalar: float = Field(default=1.0, gt=0, le=1.0)
    modes: List[int] = Field(default_factory=list)

    @property
    def size(self) -> int:
        """Dimension n of each matrix."""
        return int(self.matrices.shape[-1])

    @property
    def frequency_dependent(self) -> bool:
        """True when one matrix per grid frequency is stored."""
        return self.matrices.shape[0] > 1

    def effective(self) -> np.ndarray:
        """Matrices with the insertion loss applied."""
        return self.loss_scalar * self.matrices

    def calibrated(self) -> "MixingMatrix":
        """Same mixing with the insertion loss divided back out."""
        return self.model_copy(update={"loss_scalar": 1.0})


class GramReport(BaseModel):
    """Result of comparing ensemble-averaged Gram matrices E{HH^H} of two sets."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    max_deviation: float
    tolerance: float
    passed: bool
    per_frequency_deviation: np.ndarray
