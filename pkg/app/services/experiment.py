"""This file contains the experiment service behind every CLI verb.

The service materializes the two channel ensembles once (without OAM, and with the
metasurface mixing applied) and derives every artifact from them: capacity, BER,
correlation and coherence tables, summary.json, metrics and optional plots.
"""

import math
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, InsufficientPointsError
from app.core.link.chanmodel import (
    analytic_coherence_bandwidth,
    channel_to_impulse,
    excess_delay,
    normalize_channel,
    synth_channel,
)
from app.core.link.detect import ergodic_capacity, sweep_link
from app.core.link.metrics import coherence_bandwidth, complex_correlation, fit_ber_constant
from app.core.link.oam import apply_mixing, gram_invariance_check, loss_amplitude, make_oam_mixing
from app.core.logging import logger
from app.core.metrics import export_metrics, track_stage
from app.schemas.channel import ChannelSet, FrequencyGrid
from app.schemas.experiment import ExperimentConfig, ExperimentSummary, SystemSummary
from app.schemas.link import CapacityCurve, LinkResult, SnrPoint
from app.schemas.metrics import BerFitResult, CoherenceResult, CorrelationCurve
from app.schemas.oam import MixingMatrix
from app.schemas.phy import Constellation
from app.services.channel_io import export_channel_csv, ingest_channel_csv
from app.utils import plotting
from app.utils.file_utils import create_dir, write_csv, write_text

WITH_OAM = "with_oam"
WITHOUT_OAM = "without_oam"


class ExperimentService:
    """Runs the with-OAM vs. without-OAM comparison for one configuration.

    Results are computed lazily and cached, so ``run`` reuses what individual verbs
    already produced.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        workers: Optional[int] = None,
        show_progress: Optional[bool] = None,
    ):
        """Bind the service to a validated configuration.

        Args:
            config: Experiment configuration.
            workers: Thread pool size for the link runner; defaults to settings.WORKERS.
            show_progress: tqdm bars; defaults to settings.SHOW_PROGRESS.
        """
        self.config = config
        self.output_dir: Path = config.output_dir
        self.workers = workers
        self.show_progress = show_progress
        self.constellation = Constellation(order=config.constellation_order)
        create_dir(self.output_dir)

    @property
    def plots_enabled(self) -> bool:
        """Whether SVG figures are rendered."""
        return self.config.plots or settings.PLOTS_ENABLED

    @property
    def tx_pair(self) -> Tuple[int, int]:
        """Transmit branches compared in correlation.csv."""
        return (0, min(1, self.config.n_tx - 1))

    @cached_property
    def channels(self) -> Dict[str, ChannelSet]:
        """Normalized channel ensembles keyed by system label."""
        if self.config.mode == "ingest":
            with track_stage("ingest"):
                channels = self._ingest_channels()
        else:
            with track_stage("synthesize"):
                channels = self._synthesize_channels()
        without_oam, with_oam = channels[WITHOUT_OAM], channels[WITH_OAM]
        if without_oam.samples.shape != with_oam.samples.shape or not without_oam.grid.matches(with_oam.grid):
            raise DimensionMismatchError(
                f"with-OAM set {with_oam.samples.shape} does not match without-OAM set {without_oam.samples.shape}"
            )
        logger.info(
            "channels_ready",
            mode=self.config.mode,
            n_samples=without_oam.n_samples,
            grid_count=without_oam.grid.count,
            n_rx=without_oam.n_rx,
            n_tx=without_oam.n_tx,
        )
        return channels

    def _mixing(self, grid: FrequencyGrid) -> MixingMatrix:
        mixing = make_oam_mixing(self.config.oam, grid, self.config.seed)
        return mixing.calibrated() if self.config.calibrate_insertion_loss else mixing

    def _synthesize_channels(self) -> Dict[str, ChannelSet]:
        cfg = self.config
        base = synth_channel(cfg.grid, cfg.plan, cfg.pdp, cfg.n_rx, cfg.n_tx, cfg.seed, label=WITHOUT_OAM)
        # the base ensemble is its own reference measurement
        normalized = normalize_channel(base, base)
        return {WITHOUT_OAM: normalized, WITH_OAM: apply_mixing(normalized, self._mixing(base.grid), label=WITH_OAM)}

    def _ingest_channels(self) -> Dict[str, ChannelSet]:
        cfg = self.config
        base = ingest_channel_csv(cfg.input_path, label=WITHOUT_OAM)
        if base.n_tx != cfg.n_tx:
            raise DimensionMismatchError(
                f"file has n_tx={base.n_tx} but {cfg.n_tx} OAM modes are configured", path=str(cfg.input_path)
            )
        reference = ingest_channel_csv(cfg.reference_path, label="reference") if cfg.reference_path else base
        if not reference.grid.matches(base.grid):
            raise DimensionMismatchError("reference measurement uses a different frequency grid")
        normalized = normalize_channel(base, reference)

        if cfg.input_with_oam_path is None:
            with_oam = apply_mixing(normalized, self._mixing(base.grid), label=WITH_OAM)
        else:
            measured = normalize_channel(ingest_channel_csv(cfg.input_with_oam_path, label=WITH_OAM), reference)
            if cfg.calibrate_insertion_loss:
                measured = measured.with_samples(measured.samples / loss_amplitude(cfg.oam.insertion_loss_db))
            with_oam = measured
        return {WITHOUT_OAM: normalized, WITH_OAM: with_oam}

    def export_channels(self) -> List[Path]:
        """Write both normalized ensembles in the channel file format."""
        paths = []
        for label, channel in self.channels.items():
            path = self.output_dir / f"channel_{label}.csv"
            export_channel_csv(channel, path)
            paths.append(path)
        return paths

    @cached_property
    def capacity_curves(self) -> Dict[str, CapacityCurve]:
        """Ergodic capacity of both systems at capacity_snr_db."""
        gamma = SnrPoint(gamma_db=self.config.capacity_snr_db)
        with track_stage("capacity"):
            return {label: ergodic_capacity(channel, gamma) for label, channel in self.channels.items()}

    def capacity(self) -> Path:
        """Write capacity.csv."""
        curves = self.capacity_curves
        with_oam, without_oam = curves[WITH_OAM], curves[WITHOUT_OAM]
        path = write_csv(
            self.output_dir / "capacity.csv",
            ["freq_hz", "capacity_with", "capacity_without"],
            zip(with_oam.frequencies, with_oam.capacity_bps_hz, without_oam.capacity_bps_hz),
        )
        if self.plots_enabled:
            plotting.plot_capacity(
                self.output_dir / "capacity.svg",
                with_oam.frequencies,
                with_oam.capacity_bps_hz,
                without_oam.capacity_bps_hz,
                self.config.capacity_snr_db,
            )
        return path

    @cached_property
    def link_results(self) -> Dict[str, List[LinkResult]]:
        """BER sweep of both systems."""
        cfg = self.config
        results = {}
        with track_stage("ber"):
            for label, channel in self.channels.items():
                results[label] = sweep_link(
                    channel,
                    cfg.ofdm,
                    self.constellation,
                    cfg.snr_sweep_db,
                    cfg.frames_per_sample,
                    cfg.seed,
                    workers=self.workers,
                    equalizer=cfg.equalizer,
                    show_progress=self.show_progress,
                )
        return results

    def fit(self, label: str) -> Optional[BerFitResult]:
        """K / gamma fit of one system over ber_fit_range_db, or None when too few usable points."""
        points = []
        for result in self.link_results[label]:
            if result.ber > 0:
                points.append((SnrPoint(gamma_db=result.gamma_db).gamma_linear, result.ber))
            else:
                logger.warning("zero_ber_point_dropped", label=label, gamma_db=result.gamma_db)
        try:
            return fit_ber_constant(points, self.config.ber_fit_range_db)
        except InsufficientPointsError as e:
            logger.warning("ber_fit_skipped", label=label, reason=e.message)
            return None

    def ber(self) -> Path:
        """Write ber.csv; the reference column uses K fitted on the without-OAM system."""
        results = self.link_results
        reference_fit = self.fit(WITHOUT_OAM)
        rows = []
        for with_oam, without_oam in zip(results[WITH_OAM], results[WITHOUT_OAM]):
            gamma_linear = SnrPoint(gamma_db=without_oam.gamma_db).gamma_linear
            k_over_gamma = reference_fit.k_constant / gamma_linear if reference_fit else math.nan
            rows.append((without_oam.gamma_db, with_oam.ber, without_oam.ber, k_over_gamma))
        path = write_csv(self.output_dir / "ber.csv", ["gamma_db", "ber_with", "ber_without", "k_over_gamma"], rows)
        if self.plots_enabled:
            gammas, ber_with, ber_without, reference = (list(column) for column in zip(*rows))
            plotting.plot_ber(
                self.output_dir / "ber.svg",
                gammas,
                ber_with,
                ber_without,
                reference if reference_fit else None,
            )
        return path

    @cached_property
    def correlation_curves(self) -> Dict[str, Dict[str, CorrelationCurve]]:
        """Transmit- and receive-side correlation curves of both systems."""
        rx_pair = (0, min(1, self.config.n_rx - 1))
        with track_stage("correlation"):
            return {
                label: {
                    "transmit": complex_correlation(channel, "transmit", self.tx_pair),
                    "receive": complex_correlation(channel, "receive", rx_pair),
                }
                for label, channel in self.channels.items()
            }

    def correlation(self) -> Path:
        """Write correlation.csv (transmit side)."""
        with_oam = self.correlation_curves[WITH_OAM]["transmit"]
        without_oam = self.correlation_curves[WITHOUT_OAM]["transmit"]
        path = write_csv(
            self.output_dir / "correlation.csv",
            ["freq_hz", "corr_with", "corr_without"],
            zip(with_oam.frequencies, with_oam.magnitude, without_oam.magnitude),
        )
        if self.plots_enabled:
            plotting.plot_correlation(
                self.output_dir / "correlation.svg", with_oam.frequencies, with_oam.magnitude, without_oam.magnitude
            )
        return path

    @cached_property
    def coherence_results(self) -> Dict[str, CoherenceResult]:
        """Coherence bandwidth of both systems."""
        with track_stage("coherence"):
            return {
                label: coherence_bandwidth(channel, self.config.coherence_threshold)
                for label, channel in self.channels.items()
            }

    def coherence(self) -> Path:
        """Write coherence.csv with |R| against frequency separation."""
        with_oam, without_oam = self.coherence_results[WITH_OAM], self.coherence_results[WITHOUT_OAM]
        for label, result in self.coherence_results.items():
            logger.info(
                "coherence_bandwidth",
                label=label,
                bandwidth_hz=result.bandwidth_hz,
                lower_bound=result.lower_bound,
            )
        return write_csv(
            self.output_dir / "coherence.csv",
            ["lag_hz", "magnitude_with", "magnitude_without"],
            zip(without_oam.lags_hz, with_oam.magnitude, without_oam.magnitude),
        )

    def summarize(self) -> ExperimentSummary:
        """Collect the headline numbers of both systems."""
        cfg = self.config
        capacity = self.capacity_curves
        systems = {}
        for label, channel in self.channels.items():
            fit = self.fit(label)
            results = self.link_results[label]
            coherence = self.coherence_results[label]
            systems[label] = SystemSummary(
                label=label,
                capacity_mean_bps_hz=capacity[label].mean,
                coherence_bandwidth_hz=coherence.bandwidth_hz,
                coherence_lower_bound=coherence.lower_bound,
                excess_delay_s=excess_delay(channel_to_impulse(channel), cfg.excess_delay_fraction),
                mean_tx_correlation=self.correlation_curves[label]["transmit"].mean,
                mean_rx_correlation=self.correlation_curves[label]["receive"].mean,
                ber_fit=fit,
                ber={f"{r.gamma_db:g}": r.ber for r in results},
                singular_subcarriers={f"{r.gamma_db:g}": r.singular_subcarriers for r in results},
                impulse_energy_kept=min((r.impulse_energy_kept for r in results), default=1.0),
            )

        mean_without = capacity[WITHOUT_OAM].mean
        difference = np.mean(np.abs(capacity[WITH_OAM].capacity_bps_hz - capacity[WITHOUT_OAM].capacity_bps_hz))
        gram = gram_invariance_check(self.channels[WITHOUT_OAM], self.channels[WITH_OAM])
        return ExperimentSummary(
            version=settings.VERSION,
            mode=cfg.mode,
            seed=cfg.seed,
            n_samples=self.channels[WITHOUT_OAM].n_samples,
            capacity_snr_db=cfg.capacity_snr_db,
            capacity_mean_abs_difference_rel=float(difference / mean_without) if mean_without > 0 else math.nan,
            gram_max_deviation=gram.max_deviation,
            analytic_coherence_bandwidth_hz=(
                analytic_coherence_bandwidth(cfg.pdp.decay_constant_s, cfg.coherence_threshold)
                if cfg.mode == "synthesize"
                else None
            ),
            systems=systems,
            config=cfg.model_dump(mode="json"),
        )

    def run(self) -> Dict[str, Path]:
        """Full pipeline: every table, summary.json, metrics.prom and optional plots."""
        logger.info(
            "experiment_started", mode=self.config.mode, seed=self.config.seed, output_dir=str(self.output_dir)
        )
        artifacts = {
            "capacity": self.capacity(),
            "ber": self.ber(),
            "correlation": self.correlation(),
            "coherence": self.coherence(),
        }
        summary = self.summarize()
        artifacts["summary"] = write_text(self.output_dir / "summary.json", summary.model_dump_json(indent=2))
        if settings.METRICS_ENABLED:
            artifacts["metrics"] = self.output_dir / "metrics.prom"
            export_metrics(artifacts["metrics"])
        logger.info(
            "experiment_complete",
            output_dir=str(self.output_dir),
            capacity_difference_rel=summary.capacity_mean_abs_difference_rel,
        )
        return artifacts
