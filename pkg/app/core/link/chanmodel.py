"""Reverberation-chamber channel ensembles in the frequency domain.

A stirred chamber is modelled as an ensemble of independent tapped delay lines with an
exponential power delay profile. Taps sit on the impulse-sample lattice of the frequency
grid (period 1 / (count * step)), so the transfer function is the exact DFT of the
zero-padded tap vector and the inverse transform gives back the drawn taps.
"""

import math
from typing import Optional

import numpy as np

from app.core.exceptions import (
    AliasingError,
    ConfigError,
    DegenerateReferenceError,
    DimensionMismatchError,
    NoEnergyError,
)
from app.core.link.rng import Stream, complex_normal, stream_rng
from app.core.logging import logger
from app.schemas.channel import (
    ChannelSet,
    FrequencyGrid,
    ImpulseSet,
    PowerDelayProfile,
    StirringPlan,
)

DEGENERATE_POWER = 1e-30


def tap_bins(grid: FrequencyGrid, pdp: PowerDelayProfile) -> np.ndarray:
    """Impulse-lattice bin of every PDP tap.

    Raises:
        AliasingError: If the profile span exceeds 1 / step_hz, the unambiguous delay range of the grid.
    """
    max_delay = 1.0 / grid.step_hz
    if pdp.span_s > max_delay * (1 + 1e-12):
        raise AliasingError(
            f"PDP span {pdp.span_s:.6g} s exceeds the unambiguous delay range 1/step = {max_delay:.6g} s",
            span_s=pdp.span_s,
            max_delay_s=max_delay,
        )
    bins = np.floor(pdp.delays_s() / grid.impulse_period_s + 1e-9).astype(np.int64)
    if bins[-1] >= grid.count:
        raise AliasingError(
            f"last tap lands on bin {bins[-1]} beyond the {grid.count}-point grid",
            span_s=pdp.span_s,
        )
    return bins


def _coloring_factor(correlation: Optional[np.ndarray], size: int, side: str) -> Optional[np.ndarray]:
    if correlation is None:
        return None
    correlation = np.asarray(correlation, dtype=complex)
    if correlation.shape != (size, size):
        raise DimensionMismatchError(
            f"{side} correlation must be {size}x{size}, got {correlation.shape}", side=side
        )
    try:
        return np.linalg.cholesky(correlation)
    except np.linalg.LinAlgError as e:
        raise ConfigError(f"{side} correlation matrix is not positive definite", side=side) from e


def synth_channel(
    grid: FrequencyGrid,
    plan: StirringPlan,
    pdp: PowerDelayProfile,
    n_rx: int,
    n_tx: int,
    seed: int,
    rx_correlation: Optional[np.ndarray] = None,
    tx_correlation: Optional[np.ndarray] = None,
    label: str = "without_oam",
) -> ChannelSet:
    """Draw a Rayleigh MIMO ensemble over the stirring plan.

    Each (sample, rx, tx) entry gets its own tap vector of independent zero-mean
    circularly-symmetric complex Gaussian taps with variances given by the PDP, drawn
    from the stream (seed, CHANNEL, s, r, t). The optional correlation matrices color
    the ensemble with a Kronecker structure H <- L_r H L_t^T.

    Args:
        grid: Frequency grid to evaluate the transfer function on.
        plan: Stirring plan; its total is the ensemble size S.
        pdp: Power delay profile.
        n_rx: Receive antennas.
        n_tx: Transmit antennas.
        seed: Master seed.
        rx_correlation: Optional receive correlation matrix (n_rx x n_rx).
        tx_correlation: Optional transmit correlation matrix (n_tx x n_tx).
        label: Label of the resulting set.

    Returns:
        ChannelSet: Samples of shape (S, grid.count, n_rx, n_tx).
    """
    if n_rx <= 0 or n_tx <= 0:
        raise ConfigError(f"antenna counts must be positive, got n_rx={n_rx} n_tx={n_tx}")
    bins = tap_bins(grid, pdp)
    powers = pdp.powers()
    n_samples = plan.total_samples
    logger.debug(
        "synth_channel_start",
        n_samples=n_samples,
        grid_count=grid.count,
        n_rx=n_rx,
        n_tx=n_tx,
        tap_count=pdp.tap_count,
        seed=seed,
    )

    taps = np.zeros((n_samples, grid.count, n_rx, n_tx), dtype=complex)
    for s in range(n_samples):
        for r in range(n_rx):
            for t in range(n_tx):
                draws = complex_normal(stream_rng(seed, Stream.CHANNEL, s, r, t), pdp.tap_count, powers)
                # taps sharing a bin add up
                np.add.at(taps[s, :, r, t], bins, draws)

    samples = np.fft.fft(taps, axis=1)

    l_rx = _coloring_factor(rx_correlation, n_rx, "receive")
    if l_rx is not None:
        samples = np.einsum("ab,sfbt->sfat", l_rx, samples)
    l_tx = _coloring_factor(tx_correlation, n_tx, "transmit")
    if l_tx is not None:
        samples = np.einsum("sfrb,ab->sfra", samples, l_tx)

    logger.info("synth_channel_complete", n_samples=n_samples, mean_power=float(np.mean(np.abs(samples) ** 2)))
    return ChannelSet(grid=grid, n_rx=n_rx, n_tx=n_tx, samples=samples, label=label)


def average_power(channel: ChannelSet) -> float:
    """Mean of |H|^2 over samples, frequencies and antenna pairs."""
    return float(np.mean(channel.samples.real**2 + channel.samples.imag**2))


def normalize_channel(channel: ChannelSet, reference: ChannelSet) -> ChannelSet:
    """Divide every entry by the square root of the reference's average power transfer.

    Raises:
        DegenerateReferenceError: If the reference power is below 1e-30.
    """
    p_ref = average_power(reference)
    if p_ref < DEGENERATE_POWER:
        raise DegenerateReferenceError(
            f"reference average power {p_ref:.3g} is degenerate", reference=reference.label, power=p_ref
        )
    logger.debug("normalize_channel", label=channel.label, reference=reference.label, reference_power=p_ref)
    return channel.with_samples(channel.samples / math.sqrt(p_ref))


def channel_to_impulse(channel: ChannelSet) -> ImpulseSet:
    """Inverse DFT of every frequency response along the grid axis.

    The impulse has grid.count taps spaced 1 / (count * step) apart, and
    sum_k |h_k|^2 = (1 / count) * sum_f |H_f|^2 for every entry.
    """
    taps = np.fft.ifft(channel.samples, axis=1)
    return ImpulseSet(sample_period_s=channel.grid.impulse_period_s, taps=taps, label=channel.label)


def delay_profile(impulse: ImpulseSet) -> np.ndarray:
    """Ensemble-averaged tap energy."""
    return np.mean(np.abs(impulse.taps) ** 2, axis=(0, 2, 3))


def excess_delay(impulse: ImpulseSet, energy_fraction: float) -> float:
    """Smallest delay that contains the given fraction of the mean tap energy.

    Raises:
        ConfigError: If energy_fraction is outside (0, 1].
        NoEnergyError: If the impulse set carries no energy.
    """
    if not 0.0 < energy_fraction <= 1.0:
        raise ConfigError(f"energy_fraction must be in (0, 1], got {energy_fraction}")
    cumulative = np.cumsum(delay_profile(impulse))
    total = cumulative[-1]
    if total <= 0.0:
        raise NoEnergyError("impulse set has zero energy", label=impulse.label)
    index = int(np.argmax(cumulative >= energy_fraction * total * (1 - 1e-12)))
    return index * impulse.sample_period_s


def pdp_frequency_correlation(pdp: PowerDelayProfile, delta_f_hz: float | np.ndarray) -> np.ndarray:
    """Frequency correlation of the discrete profile, sum_k p_k exp(-j 2 pi df tau_k)."""
    delta_f = np.atleast_1d(np.asarray(delta_f_hz, dtype=float))
    phases = np.exp(-2j * np.pi * np.outer(delta_f, pdp.delays_s()))
    return phases @ pdp.powers()


def analytic_coherence_bandwidth(decay_constant_s: float, threshold: float = 0.5) -> float:
    """Coherence bandwidth of a continuous exponential profile.

    |R(df)| = (1 + (2 pi df sigma)^2)^(-1/2) falls to the threshold at
    sqrt(1 / threshold^2 - 1) / (2 pi sigma).
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must be in (0, 1), got {threshold}")
    return math.sqrt(1.0 / threshold**2 - 1.0) / (2.0 * math.pi * decay_constant_s)
