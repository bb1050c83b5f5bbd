"""Gray-coded QAM and the cyclic-prefix OFDM modem.

Both modem sides use the unitary DFT scaling (1/sqrt(N)), so energy and SNR bookkeeping
is the same in the time and the subcarrier domain. Arrays may carry leading batch axes
(frames); the last two axes are always (stream or branch, subcarrier or time sample).
"""

import math
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import erfc

from app.core.exceptions import ConfigError, DimensionMismatchError, NonFiniteSymbolError
from app.core.link.rng import Stream, complex_normal, stream_rng
from app.schemas.phy import Constellation, OfdmConfig, OfdmFrame


def qam_map(bits: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Map bits to constellation points.

    Consecutive groups of log2(order) bits along the last axis form one symbol; the first
    half of a group selects the in-phase level and the second half the quadrature level.

    Raises:
        DimensionMismatchError: If the last axis is not a multiple of log2(order).
    """
    bits = np.asarray(bits)
    b = constellation.bits_per_symbol
    if bits.ndim == 0 or bits.shape[-1] % b:
        raise DimensionMismatchError(
            f"bit count {bits.shape[-1] if bits.ndim else 0} is not a multiple of {b}", bits_per_symbol=b
        )
    groups = bits.reshape(*bits.shape[:-1], bits.shape[-1] // b, b).astype(np.int64)
    weights = 1 << np.arange(b - 1, -1, -1)
    return constellation.points[groups @ weights]


def qam_demap(symbols: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Hard minimum-distance decision back to bits.

    Square QAM decision regions separate per axis, so each axis is decided on its own;
    scanning levels in label order resolves ties toward the lower constellation index.

    Raises:
        NonFiniteSymbolError: If any symbol is NaN or infinite.
    """
    # a lone symbol demaps to one bit group
    symbols = np.atleast_1d(np.asarray(symbols, dtype=complex))
    if not np.all(np.isfinite(symbols)):
        bad = np.argwhere(~np.isfinite(symbols))[0]
        raise NonFiniteSymbolError("received symbol is not finite", index=tuple(int(i) for i in bad))

    levels = constellation.label_levels
    i_label = np.argmin(np.abs(symbols.real[..., np.newaxis] - levels), axis=-1)
    q_label = np.argmin(np.abs(symbols.imag[..., np.newaxis] - levels), axis=-1)
    index = (i_label << constellation.bits_per_axis) | q_label

    b = constellation.bits_per_symbol
    shifts = np.arange(b - 1, -1, -1)
    bits = (index[..., np.newaxis] >> shifts) & 1
    return bits.reshape(*symbols.shape[:-1], symbols.shape[-1] * b).astype(np.uint8)


def ofdm_modulate(symbols: np.ndarray, cfg: OfdmConfig) -> OfdmFrame:
    """Unitary IDFT per stream with the last cp_len samples prepended.

    Raises:
        DimensionMismatchError: If symbols are not (..., n_streams, n_subcarriers).
    """
    symbols = np.asarray(symbols, dtype=complex)
    if symbols.ndim < 2 or symbols.shape[-2:] != (cfg.n_streams, cfg.n_subcarriers):
        raise DimensionMismatchError(
            f"symbols shape {symbols.shape} does not end in ({cfg.n_streams}, {cfg.n_subcarriers})",
            n_streams=cfg.n_streams,
            n_subcarriers=cfg.n_subcarriers,
        )
    body = np.fft.ifft(symbols, axis=-1, norm="ortho")
    prefix = body[..., cfg.n_subcarriers - cfg.cp_len :]
    return OfdmFrame(symbols=symbols, time_samples=np.concatenate([prefix, body], axis=-1))


def ofdm_demodulate(time_samples: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Strip the cyclic prefix and apply the unitary DFT.

    Raises:
        DimensionMismatchError: If the last axis is not n_subcarriers + cp_len long.
    """
    time_samples = np.asarray(time_samples, dtype=complex)
    if time_samples.shape[-1] != cfg.symbol_len:
        raise DimensionMismatchError(
            f"frame length {time_samples.shape[-1]} differs from n_subcarriers + cp_len = {cfg.symbol_len}",
            symbol_len=cfg.symbol_len,
        )
    return np.fft.fft(time_samples[..., cfg.cp_len :], axis=-1, norm="ortho")


def convolve_mimo(time_signal: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Pass per-stream time signals through a MIMO impulse response.

    Args:
        time_signal: Shape (..., n_tx, T).
        taps: Impulse response of shape (L, n_rx, n_tx).

    Returns:
        np.ndarray: Shape (..., n_rx, T); y_r = sum_t h_rt * x_t truncated to the frame length.
    """
    time_signal = np.asarray(time_signal, dtype=complex)
    n_taps, n_rx, n_tx = taps.shape
    if time_signal.ndim < 2 or time_signal.shape[-2] != n_tx:
        raise DimensionMismatchError(
            f"signal has {time_signal.shape[-2] if time_signal.ndim >= 2 else 0} streams, channel has n_tx={n_tx}"
        )
    length = time_signal.shape[-1]
    kernel = np.moveaxis(taps, 0, -1).reshape((1,) * (time_signal.ndim - 2) + (n_rx, n_tx, n_taps))
    full = fftconvolve(time_signal[..., np.newaxis, :, :], kernel, axes=-1)
    return full.sum(axis=-2)[..., :length]


def noise_variance(snr_db: float, signal_power_ref: float = 1.0) -> float:
    """sigma^2 = signal_power_ref / 10^(snr_db / 10); zero for the +inf sentinel."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    if not math.isfinite(snr_db):
        raise ConfigError(f"snr_db must be finite or +inf, got {snr_db}")
    return signal_power_ref / 10.0 ** (snr_db / 10.0)


def awgn(
    signal: np.ndarray,
    snr_db: float,
    signal_power_ref: float = 1.0,
    seed: int = 0,
    key: Sequence[int] = (),
) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise.

    With a unit-gain channel and n_streams unit-energy streams, signal_power_ref = n_streams
    gives each stream gamma / n_streams of transmit power against unit noise.

    Args:
        signal: Complex samples of one receive branch (or any shape).
        snr_db: Reference SNR; +inf disables noise.
        signal_power_ref: Power the SNR refers to.
        seed: Master seed.
        key: Stream indices, (sample, frame, branch) inside the link runner. Without a key the
            noise comes from the stand-alone AWGN stream of the seed.
    """
    variance = noise_variance(snr_db, signal_power_ref)
    signal = np.asarray(signal, dtype=complex)
    if variance == 0.0:
        return signal.copy()
    rng = stream_rng(seed, Stream.NOISE, *key) if key else stream_rng(seed, Stream.AWGN)
    return signal + complex_normal(rng, signal.shape, variance)


def q_function(x: np.ndarray) -> np.ndarray:
    """Gaussian tail probability."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def theoretical_qam_ber_awgn(order: int, es_n0: float | np.ndarray) -> np.ndarray:
    """Gray-coded square M-QAM bit error rate over AWGN (nearest-neighbour form).

    BER = 4 (1 - 1/sqrt(M)) / log2(M) * Q(sqrt(3 Es/N0 / (M - 1))), exact for QPSK.
    """
    m = float(order)
    factor = 4.0 * (1.0 - 1.0 / math.sqrt(m)) / math.log2(m)
    return factor * q_function(np.sqrt(3.0 * np.asarray(es_n0, dtype=float) / (m - 1.0)))
