"""This file contains the experiment configuration and summary schemas."""

from pathlib import Path
from typing import (
    Any,
    Dict,
    List,
    Literal,
    Mapping,
    Optional,
    Tuple,
)

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from app.core.config import parse_list
from app.core.exceptions import ConfigError
from app.schemas.channel import FrequencyGrid, PowerDelayProfile, StirringPlan
from app.schemas.metrics import BerFitResult
from app.schemas.oam import OamModeSpec
from app.schemas.phy import OfdmConfig

# flat config key -> (section, field); section None means a top-level field
FLAT_KEYS: Dict[str, Tuple[Optional[str], str]] = {
    "mode": (None, "mode"),
    "input_path": (None, "input_path"),
    "input_with_oam_path": (None, "input_with_oam_path"),
    "reference_path": (None, "reference_path"),
    "output_dir": (None, "output_dir"),
    "seed": (None, "seed"),
    "grid_start_hz": ("grid", "start_hz"),
    "grid_step_hz": ("grid", "step_hz"),
    "grid_count": ("grid", "count"),
    "platform_states": ("plan", "platform_states"),
    "stirrer_states": ("plan", "stirrer_states"),
    "pdp_tap_spacing_s": ("pdp", "tap_spacing_s"),
    "pdp_tap_count": ("pdp", "tap_count"),
    "pdp_decay_constant_s": ("pdp", "decay_constant_s"),
    "n_rx": (None, "n_rx"),
    "oam_modes": ("oam", "modes"),
    "oam_insertion_loss_db": ("oam", "insertion_loss_db"),
    "oam_frequency_dependent": ("oam", "frequency_dependent"),
    "calibrate_insertion_loss": (None, "calibrate_insertion_loss"),
    "ofdm_subcarriers": ("ofdm", "n_subcarriers"),
    "ofdm_cp_len": ("ofdm", "cp_len"),
    "ofdm_sample_rate_hz": ("ofdm", "sample_rate_hz"),
    "constellation_order": (None, "constellation_order"),
    "snr_sweep_db": (None, "snr_sweep_db"),
    "capacity_snr_db": (None, "capacity_snr_db"),
    "ber_fit_range_db": (None, "ber_fit_range_db"),
    "frames_per_sample": (None, "frames_per_sample"),
    "coherence_threshold": (None, "coherence_threshold"),
    "excess_delay_fraction": (None, "excess_delay_fraction"),
    "equalizer": (None, "equalizer"),
    "plots": (None, "plots"),
}

LIST_KEYS = {"oam_modes", "snr_sweep_db", "ber_fit_range_db"}


class ExperimentConfig(BaseModel):
    """Declarative description of a with-OAM vs. without-OAM comparison run.

    Defaults mirror the measured setup: 5-5.2 GHz at 1 MHz, 20 x 20 stirring samples,
    a 2x2 link with modes 1 and 2, 512 subcarriers, CP 128, 64-QAM.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["synthesize", "ingest"] = "synthesize"
    input_path: Optional[Path] = None
    input_with_oam_path: Optional[Path] = None
    reference_path: Optional[Path] = None
    output_dir: Path = Path("results")
    seed: int = Field(..., ge=0, description="Master seed; required so runs are never silently nondeterministic")

    grid: FrequencyGrid = Field(default_factory=FrequencyGrid)
    plan: StirringPlan = Field(default_factory=StirringPlan)
    pdp: PowerDelayProfile = Field(default_factory=PowerDelayProfile)
    n_rx: int = Field(default=2, gt=0)
    oam: OamModeSpec = Field(default_factory=OamModeSpec)
    calibrate_insertion_loss: bool = True
    ofdm: OfdmConfig = Field(default_factory=OfdmConfig)
    constellation_order: Literal[4, 16, 64] = 64

    snr_sweep_db: List[float] = Field(default_factory=lambda: [float(g) for g in range(0, 45, 5)])
    capacity_snr_db: float = 15.0
    ber_fit_range_db: Tuple[float, float] = (25.0, 35.0)
    frames_per_sample: int = Field(default=10, gt=0)
    coherence_threshold: float = Field(default=0.5, gt=0, lt=1)
    excess_delay_fraction: float = Field(default=0.999, gt=0, le=1)
    equalizer: str = "zf"
    plots: bool = False

    @field_validator("constellation_order", mode="before")
    @classmethod
    def parse_order(cls, v: Any) -> Any:
        """Config files carry the order as text; Literal matching needs the integer."""
        if isinstance(v, str) and v.strip().isdigit():
            return int(v)
        return v

    @field_validator("snr_sweep_db")
    @classmethod
    def validate_sweep(cls, v: List[float]) -> List[float]:
        """Sweep must be nonempty and strictly increasing."""
        if not v:
            raise ValueError("snr_sweep_db must not be empty")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"snr_sweep_db must be strictly increasing, got {v}")
        return v

    @field_validator("ber_fit_range_db")
    @classmethod
    def validate_fit_range(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        """Range bounds must be ordered."""
        if v[1] <= v[0]:
            raise ValueError(f"ber_fit_range_db upper bound must exceed lower bound, got {v}")
        return v

    @model_validator(mode="after")
    def validate_consistency(self) -> "ExperimentConfig":
        """Cross-field checks between the channel, the metasurfaces and the modem."""
        if self.mode == "ingest" and self.input_path is None:
            raise ValueError("ingest mode requires input_path")
        if self.ofdm.n_streams != self.oam.n_tx:
            raise ValueError(
                f"ofdm n_streams ({self.ofdm.n_streams}) must equal the number of OAM modes ({self.oam.n_tx})"
            )
        if self.n_rx < self.oam.n_tx:
            raise ValueError(f"n_rx ({self.n_rx}) must be at least n_tx ({self.oam.n_tx}) for zero-forcing")
        if self.pdp.span_s > self.ofdm.cp_duration_s * (1 + 1e-9):
            raise ValueError(
                f"PDP span {self.pdp.span_s:.4g} s exceeds the cyclic prefix duration {self.ofdm.cp_duration_s:.4g} s"
            )
        return self

    @property
    def n_tx(self) -> int:
        """Transmit antennas, one per metasurface."""
        return self.oam.n_tx

    @classmethod
    def from_flat(cls, values: Mapping[str, Optional[str]], **overrides: Any) -> "ExperimentConfig":
        """Build a config from flat key-value pairs (as read from a config file).

        Args:
            values: Flat mapping; keys listed in FLAT_KEYS, values as text.
            **overrides: Top-level fields taking precedence over the file (e.g. seed, output_dir).

        Raises:
            ConfigError: On unknown keys.
            pydantic.ValidationError: On invalid values.
        """
        unknown = sorted(key for key in values if key.lower() not in FLAT_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}", keys=unknown)

        data: Dict[str, Any] = {}
        for raw_key, raw_value in values.items():
            if raw_value is None or raw_value.strip() == "":
                continue
            key = raw_key.lower()
            value: Any = parse_list(raw_value) if key in LIST_KEYS else raw_value.strip()
            section, field = FLAT_KEYS[key]
            if section is None:
                data[field] = value
            else:
                data.setdefault(section, {})[field] = value

        # stream count follows the metasurface count
        modes = data.get("oam", {}).get("modes")
        n_streams = len(modes) if modes is not None else len(OamModeSpec().modes)
        data.setdefault("ofdm", {})["n_streams"] = n_streams

        data.update({key: value for key, value in overrides.items() if value is not None})
        return cls.model_validate(data)


class SystemSummary(BaseModel):
    """Per-system (with or without OAM) analysis results."""

    label: str
    capacity_mean_bps_hz: float
    coherence_bandwidth_hz: float
    coherence_lower_bound: bool
    excess_delay_s: float
    mean_tx_correlation: float
    mean_rx_correlation: float
    ber_fit: Optional[BerFitResult] = None
    ber: Dict[str, float] = Field(default_factory=dict)
    singular_subcarriers: Dict[str, int] = Field(default_factory=dict)
    impulse_energy_kept: float = Field(default=1.0, description="Channel energy inside the cyclic-prefix window")


class ExperimentSummary(BaseModel):
    """Content of summary.json."""

    version: str
    mode: str
    seed: int
    n_samples: int
    capacity_snr_db: float
    capacity_mean_abs_difference_rel: float
    gram_max_deviation: float
    analytic_coherence_bandwidth_hz: Optional[float] = None
    systems: Dict[str, SystemSummary]
    config: Dict[str, Any]
