"""This file contains the schemas for the application."""

from app.schemas.channel import (
    ChannelSet,
    FrequencyGrid,
    ImpulseSet,
    PowerDelayProfile,
    StirringPlan,
)
from app.schemas.experiment import (
    ExperimentConfig,
    ExperimentSummary,
    SystemSummary,
)
from app.schemas.link import (
    CapacityCurve,
    LinkResult,
    SnrPoint,
)
from app.schemas.metrics import (
    BerFitResult,
    CoherenceResult,
    CorrelationCurve,
)
from app.schemas.oam import (
    GramReport,
    MixingMatrix,
    OamModeSpec,
)
from app.schemas.phy import (
    Constellation,
    OfdmConfig,
    OfdmFrame,
)

__all__ = [
    "FrequencyGrid",
    "StirringPlan",
    "PowerDelayProfile",
    "ChannelSet",
    "ImpulseSet",
    "OamModeSpec",
    "MixingMatrix",
    "GramReport",
    "Constellation",
    "OfdmConfig",
    "OfdmFrame",
    "SnrPoint",
    "CapacityCurve",
    "LinkResult",
    "CorrelationCurve",
    "BerFitResult",
    "CoherenceResult",
    "ExperimentConfig",
    "ExperimentSummary",
    "SystemSummary",
]
