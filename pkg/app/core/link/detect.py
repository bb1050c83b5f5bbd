"""Zero-forcing detection, ergodic capacity and the Monte-Carlo OFDM link runner."""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from app.core.config import settings
from app.core.exceptions import ConfigError, DimensionMismatchError, SingularChannelError
from app.core.link.chanmodel import channel_to_impulse
from app.core.link.phy import awgn, convolve_mimo, ofdm_demodulate, ofdm_modulate, qam_demap, qam_map
from app.core.link.rng import Stream, stream_rng
from app.core.logging import logger
from app.core.metrics import bit_errors_total, channel_samples_total, singular_subcarriers_total
from app.factories.equalizer_factory import EqualizerFactory
from app.schemas.channel import ChannelSet, FrequencyGrid
from app.schemas.link import CapacityCurve, LinkResult, SnrPoint
from app.schemas.phy import Constellation, OfdmConfig

SINGULAR_CONDITION = 1e12


@EqualizerFactory.register("zf")
class ZeroForcingEqualizer:
    """Linear zero-forcing detector x = (H^H H)^-1 H^H y.

    Matrices whose Gram H^H H has a condition number above max_condition are flagged
    singular; their weights are zero and callers exclude them from error counts.
    """

    def __init__(self, max_condition: float = SINGULAR_CONDITION):
        """Store the conditioning limit."""
        self.max_condition = max_condition

    def weights(self, h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Batched ZF weights.

        Args:
            h: Channel matrices of shape (..., n_rx, n_tx).

        Returns:
            Tuple[np.ndarray, np.ndarray]: Weights (..., n_tx, n_rx) and the singular mask (...).
        """
        h = np.asarray(h, dtype=complex)
        if h.shape[-2] < h.shape[-1]:
            raise DimensionMismatchError(
                f"zero-forcing needs n_rx >= n_tx, got {h.shape[-2]}x{h.shape[-1]}",
                n_rx=h.shape[-2],
                n_tx=h.shape[-1],
            )
        h_herm = np.conj(np.swapaxes(h, -1, -2))
        gram = h_herm @ h
        with np.errstate(divide="ignore", invalid="ignore"):
            condition = np.linalg.cond(gram)
        singular = ~np.isfinite(condition) | (condition > self.max_condition)
        safe_gram = np.where(singular[..., np.newaxis, np.newaxis], np.eye(h.shape[-1]), gram)
        w = np.linalg.solve(safe_gram, h_herm)
        w[singular] = 0.0
        return w, singular


def zf_equalize(y: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Zero-force one received vector.

    Raises:
        DimensionMismatchError: If shapes disagree or n_rx < n_tx.
        SingularChannelError: If cond(H^H H) exceeds 1e12.
    """
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or y.shape != (h.shape[0],):
        raise DimensionMismatchError(f"y shape {y.shape} does not match channel shape {h.shape}")
    w, singular = ZeroForcingEqualizer().weights(h)
    if singular:
        raise SingularChannelError("channel matrix is too ill-conditioned for zero-forcing", shape=h.shape)
    return w @ y


def ergodic_capacity(channel: ChannelSet, gamma: SnrPoint) -> CapacityCurve:
    """Per-frequency mean over samples of log2 det(I + gamma / n_tx H H^H).

    Raises:
        ConfigError: For the noise-free sentinel, where capacity is unbounded.
    """
    if gamma.noiseless:
        raise ConfigError("capacity is unbounded without noise")
    h = channel.samples
    scale = gamma.gamma_linear / channel.n_tx
    a = np.eye(channel.n_rx) + scale * (h @ np.conj(np.swapaxes(h, -1, -2)))
    _, logdet = np.linalg.slogdet(a)
    capacity = np.maximum(np.mean(logdet, axis=0) / math.log(2.0), 0.0)
    logger.debug("capacity_computed", label=channel.label, gamma_db=gamma.gamma_db, mean=float(np.mean(capacity)))
    return CapacityCurve(
        frequencies=channel.grid.frequencies,
        capacity_bps_hz=capacity,
        gamma_db=gamma.gamma_db,
        label=channel.label,
    )


class ModemChannel(NamedTuple):
    """Channel as the modem sees it."""

    taps: np.ndarray  # (S, L, n_rx, n_tx) on the modem sample period, L <= cp_len + 1
    response: np.ndarray  # (S, n_subcarriers, n_rx, n_tx)
    energy_kept: float
    resampled: bool


def lattice_matches(grid: FrequencyGrid, cfg: OfdmConfig) -> bool:
    """True when the impulse lattice 1 / (count * step) is the modem sample period.

    The grid's bandwidth may differ from the sample rate by one step, since count points
    span (count - 1) * step; the measured 201-point grid against 200 MS/s is a match.
    """
    return abs(grid.count * grid.step_hz - cfg.sample_rate_hz) <= grid.step_hz * (1 + 1e-9)


def resample_impulse(taps: np.ndarray, sample_period_s: float, cfg: OfdmConfig) -> np.ndarray:
    """Move lattice taps onto the modem sample period.

    Tap n is a delay of n * sample_period_s. Its response is evaluated exactly at the
    signed subcarrier frequencies and brought back with an n_subcarriers-point inverse DFT,
    so a delay on the modem lattice comes out as a single tap and any other delay as a
    periodic sinc.

    Returns:
        np.ndarray: Taps of shape (S, n_subcarriers, n_rx, n_tx).
    """
    frequencies = np.fft.fftfreq(cfg.n_subcarriers, d=1.0 / cfg.sample_rate_hz)
    delays = np.arange(taps.shape[1]) * sample_period_s
    phases = np.exp(-2j * np.pi * np.outer(frequencies, delays))
    return np.fft.ifft(np.einsum("ml,slrt->smrt", phases, taps), axis=1)


def _prefix_window(taps: np.ndarray, n_taps: int) -> Tuple[int, float]:
    """Circular window of n_taps taps holding the most energy; start 0 unless another wins."""
    power = np.sum(np.abs(taps) ** 2, axis=(0, 2, 3))
    total = float(power.sum())
    if n_taps >= power.size or total <= 0.0:
        return 0, 1.0
    cumulative = np.concatenate([[0.0], np.cumsum(np.concatenate([power, power[: n_taps - 1]]))])
    sums = cumulative[n_taps : n_taps + power.size] - cumulative[: power.size]
    start = int(np.argmax(sums))
    if sums[start] <= sums[0] * (1 + 1e-9):
        start = 0
    return start, float(sums[start] / total)


def modem_channel(channel: ChannelSet, cfg: OfdmConfig) -> ModemChannel:
    """Bridge the measurement grid to the modem.

    The channel is inverse-DFT'd onto its impulse lattice, resampled when that lattice is
    not the modem's, and cut to the cp_len + 1 circular window with the most energy so
    that the cyclic prefix absorbs it completely. Taps wrapped to the end of the lattice
    (precursors) are moved to the front, which delays the whole frame by a constant the
    genie response accounts for. The genie per-subcarrier response is the
    n_subcarriers-point DFT of the kept taps.
    """
    impulse = channel_to_impulse(channel)
    taps = impulse.taps
    resampled = not lattice_matches(channel.grid, cfg)
    if resampled:
        taps = resample_impulse(taps, impulse.sample_period_s, cfg)
        logger.debug(
            "impulse_resampled",
            label=channel.label,
            lattice_period_s=impulse.sample_period_s,
            modem_period_s=1.0 / cfg.sample_rate_hz,
        )

    n_taps = min(taps.shape[1], cfg.cp_len + 1)
    start, kept = _prefix_window(taps, n_taps)
    taps = np.roll(taps, -start, axis=1)[:, :n_taps]
    if kept < 1.0 - 1e-6:
        logger.warning("impulse_truncated", label=channel.label, n_taps=n_taps, start=start, energy_kept=kept)
    return ModemChannel(
        taps=taps,
        response=np.fft.fft(taps, n=cfg.n_subcarriers, axis=1),
        energy_kept=kept,
        resampled=resampled,
    )


def run_link(
    channel: ChannelSet,
    cfg: OfdmConfig,
    constellation: Constellation,
    gamma: SnrPoint,
    frames_per_sample: int,
    seed: int,
    workers: Optional[int] = None,
    equalizer: str = "zf",
    show_progress: Optional[bool] = None,
) -> LinkResult:
    """Simulate the uncoded MIMO-OFDM link over every channel sample.

    For each sample: random bits, QAM mapping, OFDM modulation, convolution with the
    impulse responses, AWGN at sigma^2 = n_streams / gamma, demodulation, genie
    zero-forcing per subcarrier, demapping and error counting. Bits come from the stream
    (seed, BITS, s) and noise from (seed, NOISE, s, frame, branch), so runs at different
    SNRs or over a mixed channel reuse the same random numbers and the result does not
    depend on the worker count.

    Args:
        channel: Channel ensemble; n_tx must equal cfg.n_streams.
        cfg: Modem parameters.
        constellation: QAM constellation.
        gamma: Reference SNR.
        frames_per_sample: OFDM symbols sent through each channel sample.
        seed: Master seed.
        workers: Thread pool size; defaults to settings.WORKERS.
        equalizer: Registered equalizer name.
        show_progress: tqdm bar over samples; defaults to settings.SHOW_PROGRESS.

    Returns:
        LinkResult: Counts over all non-singular subcarriers and the per-sample BER.
    """
    if channel.n_tx != cfg.n_streams:
        raise DimensionMismatchError(
            f"channel n_tx ({channel.n_tx}) must equal n_streams ({cfg.n_streams})",
            n_tx=channel.n_tx,
            n_streams=cfg.n_streams,
        )
    if frames_per_sample <= 0:
        raise ConfigError(f"frames_per_sample must be positive, got {frames_per_sample}")

    modem = modem_channel(channel, cfg)
    taps = modem.taps
    weights, singular = EqualizerFactory.create(equalizer).weights(modem.response)
    bits_per_frame = cfg.n_subcarriers * constellation.bits_per_symbol
    n_rx = channel.n_rx

    def run_sample(s: int) -> Tuple[int, int, int]:
        bits = stream_rng(seed, Stream.BITS, s).integers(
            0, 2, size=(frames_per_sample, cfg.n_streams, bits_per_frame), dtype=np.uint8
        )
        frame = ofdm_modulate(qam_map(bits, constellation), cfg)
        received = convolve_mimo(frame.time_samples, taps[s])
        for f in range(frames_per_sample):
            for r in range(n_rx):
                received[f, r] = awgn(received[f, r], gamma.gamma_db, cfg.n_streams, seed, key=(s, f, r))
        estimates = np.einsum("ktr,frk->ftk", weights[s], ofdm_demodulate(received, cfg))
        detected = qam_demap(estimates, constellation)

        valid = np.repeat(~singular[s], constellation.bits_per_symbol)
        errors = int(np.count_nonzero((detected != bits) & valid))
        total = int(valid.sum()) * frames_per_sample * cfg.n_streams
        return errors, total, int(singular[s].sum())

    n_workers = workers or settings.WORKERS
    progress = settings.SHOW_PROGRESS if show_progress is None else show_progress
    with ThreadPoolExecutor(max_workers=n_workers) as executor:
        outcomes: Iterable = executor.map(run_sample, range(channel.n_samples))
        if progress:
            outcomes = tqdm(outcomes, total=channel.n_samples, desc=f"{channel.label} {gamma.gamma_db:g} dB")
        counts = np.array(list(outcomes), dtype=np.int64).reshape(-1, 3)

    errors, totals, singular_counts = counts[:, 0], counts[:, 1], counts[:, 2]
    usable = totals > 0
    result = LinkResult(
        gamma_db=gamma.gamma_db,
        total_bits=int(totals.sum()),
        error_bits=int(errors.sum()),
        sample_ber=errors[usable] / totals[usable],
        singular_subcarriers=int(singular_counts.sum()),
        impulse_energy_kept=modem.energy_kept,
        label=channel.label,
    )

    channel_samples_total.labels(system=channel.label).inc(channel.n_samples)
    bit_errors_total.labels(system=channel.label).inc(result.error_bits)
    if result.singular_subcarriers:
        singular_subcarriers_total.labels(system=channel.label).inc(result.singular_subcarriers)
        logger.warning(
            "singular_subcarriers_excluded",
            label=channel.label,
            gamma_db=gamma.gamma_db,
            count=result.singular_subcarriers,
        )
    logger.info(
        "link_run_complete",
        label=channel.label,
        gamma_db=gamma.gamma_db,
        ber=result.ber,
        error_bits=result.error_bits,
        total_bits=result.total_bits,
    )
    return result


def sweep_link(
    channel: ChannelSet,
    cfg: OfdmConfig,
    constellation: Constellation,
    gammas_db: Sequence[float],
    frames_per_sample: int,
    seed: int,
    workers: Optional[int] = None,
    equalizer: str = "zf",
    show_progress: Optional[bool] = None,
) -> List[LinkResult]:
    """run_link at every SNR of a sweep with common random numbers."""
    return [
        run_link(
            channel,
            cfg,
            constellation,
            SnrPoint(gamma_db=g),
            frames_per_sample,
            seed,
            workers=workers,
            equalizer=equalizer,
            show_progress=show_progress,
        )
        for g in gammas_db
    ]
