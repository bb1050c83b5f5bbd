"""Statistics over link results and channel ensembles.

BER aggregation and the K / gamma fit, complex branch correlation across the stirring
ensemble, and the frequency autocorrelation behind the coherence bandwidth.
"""

import math
from typing import Literal, Sequence, Tuple

import numpy as np

from app.core.exceptions import (
    ConfigError,
    DimensionMismatchError,
    InsufficientPointsError,
    NumericalError,
    ZeroVarianceError,
)
from app.core.logging import logger
from app.schemas.channel import ChannelSet
from app.schemas.metrics import BerFitResult, CoherenceResult, CorrelationCurve

# centered branch power below this fraction of the raw power counts as constant
VARIANCE_FLOOR = 1e-24


def bit_error_rate(tx_bits: np.ndarray, rx_bits: np.ndarray) -> float:
    """Hamming distance over length."""
    tx_bits = np.asarray(tx_bits)
    rx_bits = np.asarray(rx_bits)
    if tx_bits.shape != rx_bits.shape:
        raise DimensionMismatchError(f"bit vectors differ in shape: {tx_bits.shape} vs {rx_bits.shape}")
    if tx_bits.size == 0:
        raise ConfigError("bit vectors are empty")
    return np.count_nonzero(tx_bits != rx_bits) / tx_bits.size


def fit_ber_constant(points: Sequence[Tuple[float, float]], range_db: Tuple[float, float]) -> BerFitResult:
    """Least-squares line through (ln gamma, ln BER) for points inside range_db.

    Args:
        points: (gamma_linear, ber) pairs.
        range_db: Inclusive SNR window in dB.

    Returns:
        BerFitResult: slope, K = exp(intercept) and the RMS residual in log space.

    Raises:
        InsufficientPointsError: If fewer than two points fall inside the window.
        NumericalError: If a point inside the window has BER <= 0.
    """
    low, high = range_db
    if high <= low:
        raise ConfigError(f"fit range upper bound must exceed lower bound, got {range_db}")
    selected = [
        (gamma, ber)
        for gamma, ber in points
        if gamma > 0 and low - 1e-9 <= 10.0 * math.log10(gamma) <= high + 1e-9
    ]
    if len(selected) < 2:
        raise InsufficientPointsError(
            f"need at least 2 points inside {low:g}..{high:g} dB, got {len(selected)}", range_db=range_db
        )
    gammas, bers = np.array(selected, dtype=float).T
    if np.any(bers <= 0):
        raise NumericalError("BER must be positive inside the fit range", range_db=range_db)

    x, y = np.log(gammas), np.log(bers)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (intercept + slope * x)) ** 2)))
    logger.debug("ber_fit", slope=float(slope), intercept=float(intercept), n_points=len(selected))
    return BerFitResult(
        k_constant=float(np.exp(intercept)),
        slope=float(slope),
        range_db=(float(low), float(high)),
        residual=residual,
        n_points=len(selected),
    )


def _branches(channel: ChannelSet, side: str, index: int) -> np.ndarray:
    if side == "transmit":
        if not 0 <= index < channel.n_tx:
            raise ConfigError(f"transmit index {index} out of range 0..{channel.n_tx - 1}")
        return channel.samples[:, :, :, index]
    if side == "receive":
        if not 0 <= index < channel.n_rx:
            raise ConfigError(f"receive index {index} out of range 0..{channel.n_rx - 1}")
        return channel.samples[:, :, index, :]
    raise ConfigError(f"side must be 'transmit' or 'receive', got {side!r}")


def complex_correlation(
    channel: ChannelSet, side: Literal["transmit", "receive"], pair: Tuple[int, int]
) -> CorrelationCurve:
    """Magnitude of the complex Pearson correlation between two branches, per frequency.

    On the transmit side the branches are columns i and j of H, each stacked over the
    receive antennas; on the receive side they are rows. Sample means are removed per
    entry before correlating across the ensemble.

    Raises:
        ZeroVarianceError: If a branch is constant across the ensemble at some frequency.
    """
    i, j = pair
    a = _branches(channel, side, i)
    b = _branches(channel, side, j)
    a_centered = a - a.mean(axis=0)
    b_centered = b - b.mean(axis=0)
    power_a = np.sum(np.abs(a_centered) ** 2, axis=(0, 2))
    power_b = np.sum(np.abs(b_centered) ** 2, axis=(0, 2))
    floor_a = VARIANCE_FLOOR * np.sum(np.abs(a) ** 2, axis=(0, 2))
    floor_b = VARIANCE_FLOOR * np.sum(np.abs(b) ** 2, axis=(0, 2))
    flat = (power_a <= floor_a) | (power_b <= floor_b)
    if np.any(flat):
        f = int(np.argmax(flat))
        raise ZeroVarianceError(
            f"{side} branch has zero variance at {channel.grid.frequencies[f]:.6g} Hz",
            side=side,
            pair=pair,
            frequency_index=f,
        )

    if i == j:
        magnitude = np.ones(channel.grid.count)
    else:
        cross = np.sum(a_centered * np.conj(b_centered), axis=(0, 2))
        magnitude = np.clip(np.abs(cross) / np.sqrt(power_a * power_b), 0.0, 1.0)
    return CorrelationCurve(
        frequencies=channel.grid.frequencies,
        magnitude=magnitude,
        side=side,
        pair=(i, j),
        label=channel.label,
    )


def frequency_autocorrelation(channel: ChannelSet) -> Tuple[np.ndarray, np.ndarray]:
    """Normalized frequency autocorrelation R(df) of the ensemble.

    R(m step) = mean over samples and antenna pairs of sum_n H[n + m] conj(H[n]) / (N - m),
    divided by R(0). Evaluated with a zero-padded FFT.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Lags in Hz and complex R at those lags.
    """
    n = channel.grid.count
    spectrum = np.fft.fft(channel.samples, n=2 * n, axis=1)
    raw = np.fft.ifft(np.abs(spectrum) ** 2, axis=1)[:, :n]
    r = np.mean(raw, axis=(0, 2, 3)) / (n - np.arange(n))
    if abs(r[0]) <= 0.0:
        raise ZeroVarianceError("channel ensemble carries no power", label=channel.label)
    return channel.grid.step_hz * np.arange(n), r / r[0]


def coherence_bandwidth(channel: ChannelSet, threshold: float = 0.5) -> CoherenceResult:
    """Smallest frequency separation where |R| drops below the threshold.

    The crossing is linearly interpolated between grid lags. When |R| stays above the
    threshold over the whole grid, the span is reported as a lower bound.
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must be in (0, 1), got {threshold}")
    lags, r = frequency_autocorrelation(channel)
    magnitude = np.abs(r)
    below = np.flatnonzero(magnitude < threshold)
    if below.size == 0:
        logger.warning("coherence_threshold_not_reached", label=channel.label, threshold=threshold)
        return CoherenceResult(
            bandwidth_hz=channel.grid.span_hz, threshold=threshold, lower_bound=True, lags_hz=lags, magnitude=magnitude
        )

    m = int(below[0])
    upper, lower = magnitude[m - 1], magnitude[m]
    bandwidth = lags[m - 1] + (upper - threshold) / (upper - lower) * channel.grid.step_hz
    return CoherenceResult(
        bandwidth_hz=float(bandwidth), threshold=threshold, lower_bound=False, lags_hz=lags, magnitude=magnitude
    )
