"""Zero-forcing detection, ergodic capacity and the OFDM link runner."""

import math

import numpy as np
import pytest

from app.core.exceptions import ConfigError, DimensionMismatchError, SingularChannelError
from app.core.link.chanmodel import channel_to_impulse, normalize_channel, synth_channel
from app.core.link.detect import (
    ZeroForcingEqualizer,
    ergodic_capacity,
    lattice_matches,
    modem_channel,
    resample_impulse,
    run_link,
    sweep_link,
    zf_equalize,
)
from app.core.link.metrics import fit_ber_constant
from app.core.link.oam import apply_mixing, haar_unitary, make_oam_mixing
from app.core.link.phy import theoretical_qam_ber_awgn
from app.core.link.rng import Stream, stream_rng
from app.schemas.channel import ChannelSet, FrequencyGrid, PowerDelayProfile, StirringPlan
from app.schemas.link import SnrPoint
from app.schemas.oam import OamModeSpec
from app.schemas.phy import Constellation, OfdmConfig


def _constant_channel(matrix: np.ndarray, n_samples: int = 1, count: int = 2) -> ChannelSet:
    matrix = np.asarray(matrix, dtype=complex)
    samples = np.broadcast_to(matrix, (n_samples, count) + matrix.shape).copy()
    return ChannelSet(grid=FrequencyGrid(count=count), n_rx=matrix.shape[0], n_tx=matrix.shape[1], samples=samples)


def _iid_channel(n_samples: int, seed: int) -> ChannelSet:
    rng = np.random.default_rng(seed)
    shape = (n_samples, 2, 2, 2)
    samples = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    return ChannelSet(grid=FrequencyGrid(count=2), n_rx=2, n_tx=2, samples=samples)


@pytest.fixture(scope="module")
def chamber_ensemble() -> ChannelSet:
    """100 normalized samples on the full grid."""
    plan = StirringPlan(platform_states=10, stirrer_states=10)
    base = synth_channel(FrequencyGrid(), plan, PowerDelayProfile(), 2, 2, 31)
    return normalize_channel(base, base)


def test_zf_identity_returns_input():
    y = np.array([0.3 - 1j, 2 + 0.5j])
    np.testing.assert_allclose(zf_equalize(y, np.eye(2)), y, atol=1e-15)


def test_zf_diagonal_channel():
    h = np.diag([2.0, 0.5])
    np.testing.assert_allclose(zf_equalize(h @ np.array([1 + 1j, -1j]), h), [1 + 1j, -1j], atol=1e-14)


def test_zf_matches_adjugate_inverse():
    rng = np.random.default_rng(5)
    h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    (a, b), (c, d) = h
    inverse = np.array([[d, -b], [-c, a]]) / (a * d - b * c)
    np.testing.assert_allclose(zf_equalize(y, h), inverse @ y, atol=1e-10)


def test_zf_rejects_singular_channel():
    with pytest.raises(SingularChannelError):
        zf_equalize(np.ones(2, dtype=complex), np.ones((2, 2)))


def test_zf_rejects_underdetermined_channel():
    with pytest.raises(DimensionMismatchError):
        zf_equalize(np.ones(1, dtype=complex), np.ones((1, 2)))


def test_batched_weights_flag_singular_subcarriers():
    h = np.stack([np.eye(2), np.ones((2, 2)), np.diag([1.0, 1e-7])]).astype(complex)
    w, singular = ZeroForcingEqualizer().weights(h)
    np.testing.assert_array_equal(singular, [False, True, True])
    np.testing.assert_allclose(w[0], np.eye(2))
    assert not np.any(w[1:])


def test_identity_channel_capacity():
    capacity = ergodic_capacity(_constant_channel(np.eye(2)), SnrPoint(gamma_db=15.0))
    expected = 2 * math.log2(1 + 10**1.5 / 2)
    np.testing.assert_allclose(capacity.capacity_bps_hz, expected, rtol=1e-12)
    assert capacity.capacity_bps_hz[0] == pytest.approx(8.143, abs=1e-3)


def test_zero_channel_has_zero_capacity():
    capacity = ergodic_capacity(_constant_channel(np.zeros((2, 2))), SnrPoint(gamma_db=20.0))
    np.testing.assert_array_equal(capacity.capacity_bps_hz, 0.0)


def test_capacity_matches_eigenvalue_oracle():
    channel = _iid_channel(100_000, seed=1)
    gamma = SnrPoint(gamma_db=10.0)
    capacity = ergodic_capacity(channel, gamma).capacity_bps_hz
    h = channel.samples
    eigenvalues = np.linalg.eigvalsh(h @ np.conj(np.swapaxes(h, -1, -2)))
    oracle = np.mean(np.sum(np.log2(1 + gamma.gamma_linear / 2 * eigenvalues), axis=-1), axis=0)
    np.testing.assert_allclose(capacity, oracle, rtol=1e-9)
    # independent draws estimate the same ergodic value
    other = ergodic_capacity(_iid_channel(100_000, seed=2), gamma).capacity_bps_hz
    np.testing.assert_allclose(other, capacity, rtol=0.02)


def test_capacity_grows_with_snr(small_ensemble):
    means = [ergodic_capacity(small_ensemble, SnrPoint(gamma_db=g)).mean for g in (0.0, 10.0, 20.0, 30.0)]
    assert np.all(np.diff(means) > 0)


def test_capacity_is_invariant_under_unitary_mixing(small_ensemble):
    u = haar_unitary(2, stream_rng(3, Stream.MIXING, 0))
    gamma = SnrPoint(gamma_db=20.0)
    before = ergodic_capacity(small_ensemble, gamma).capacity_bps_hz
    after = ergodic_capacity(small_ensemble.with_samples(small_ensemble.samples @ u), gamma).capacity_bps_hz
    np.testing.assert_allclose(after, before, atol=1e-9)


def test_capacity_rejects_noise_free_point(small_ensemble):
    with pytest.raises(ConfigError):
        ergodic_capacity(small_ensemble, SnrPoint(gamma_db=math.inf))


def test_noise_free_link_has_no_errors(small_ensemble):
    result = run_link(small_ensemble, OfdmConfig(), Constellation(), SnrPoint(gamma_db=math.inf), 1, seed=2)
    assert result.error_bits == 0
    assert result.ber == 0.0
    assert result.total_bits == 20 * 512 * 2 * 6 - result.singular_subcarriers * 2 * 6


def test_link_result_does_not_depend_on_workers(small_ensemble):
    args = (small_ensemble, OfdmConfig(), Constellation(), SnrPoint(gamma_db=20.0), 2, 4)
    single = run_link(*args, workers=1)
    pooled = run_link(*args, workers=4)
    assert single.error_bits == pooled.error_bits
    assert single.total_bits == pooled.total_bits
    np.testing.assert_array_equal(single.sample_ber, pooled.sample_ber)


def test_link_rejects_stream_mismatch(small_ensemble):
    with pytest.raises(DimensionMismatchError):
        run_link(small_ensemble, OfdmConfig(n_streams=1), Constellation(), SnrPoint(gamma_db=20.0), 1, seed=0)
    with pytest.raises(ConfigError):
        run_link(small_ensemble, OfdmConfig(), Constellation(), SnrPoint(gamma_db=20.0), 0, seed=0)


def test_unknown_equalizer_is_rejected(small_ensemble):
    with pytest.raises(ConfigError):
        run_link(small_ensemble, OfdmConfig(), Constellation(), SnrPoint(gamma_db=20.0), 1, seed=0, equalizer="mmse")


def _delay_channel(grid: FrequencyGrid, taps: np.ndarray) -> ChannelSet:
    """1x1 channel whose impulse response on the grid lattice is the given tap vector."""
    samples = np.fft.fft(np.asarray(taps, dtype=complex), axis=0)
    return ChannelSet(grid=grid, n_rx=1, n_tx=1, samples=samples[np.newaxis, :, np.newaxis, np.newaxis])


def test_matched_lattice_keeps_impulse_taps(chamber_ensemble):
    modem = modem_channel(chamber_ensemble, OfdmConfig())
    assert lattice_matches(chamber_ensemble.grid, OfdmConfig())
    assert not modem.resampled
    np.testing.assert_array_equal(modem.taps, channel_to_impulse(chamber_ensemble).taps[:, :129])
    np.testing.assert_allclose(modem.response, np.fft.fft(modem.taps, n=512, axis=1), rtol=1e-12)
    assert modem.energy_kept == pytest.approx(1.0, abs=1e-9)


def test_delay_lands_on_modem_time_scale(small_grid):
    # 32 lattice taps of 1/64 MHz is 500 ns, which is 100 samples at 200 MS/s
    impulse = np.zeros(small_grid.count)
    impulse[32] = 1.0
    modem = modem_channel(_delay_channel(small_grid, impulse), OfdmConfig(n_streams=1))
    assert modem.resampled
    assert int(np.argmax(np.abs(modem.taps[0, :, 0, 0]))) == 100
    assert abs(modem.taps[0, 100, 0, 0]) == pytest.approx(1.0, abs=1e-9)
    assert modem.energy_kept == pytest.approx(1.0, abs=1e-9)


def test_fractional_delay_is_centred_between_modem_taps(small_grid):
    # 20 lattice taps is 312.5 ns, halfway between modem taps 62 and 63
    taps = np.zeros((1, small_grid.count, 1, 1), dtype=complex)
    taps[0, 20] = 1.0
    resampled = np.abs(resample_impulse(taps, small_grid.impulse_period_s, OfdmConfig(n_streams=1))[0, :, 0, 0])
    assert set(np.argsort(resampled)[-2:]) == {62, 63}
    assert resampled[62] == pytest.approx(resampled[63], rel=1e-9)


def test_precursor_taps_stay_inside_the_prefix():
    grid = FrequencyGrid(count=64)
    cfg = OfdmConfig(n_subcarriers=64, cp_len=16, sample_rate_hz=64e6, n_streams=1)
    rng = np.random.default_rng(8)
    impulse = np.zeros(64, dtype=complex)
    impulse[:16] = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    impulse[63] = 0.5
    modem = modem_channel(_delay_channel(grid, impulse), cfg)
    assert not modem.resampled
    assert modem.energy_kept == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(modem.taps[0, :, 0, 0], np.concatenate([[0.5], impulse[:16]]), atol=1e-12)


def test_mixed_channel_keeps_at_least_the_causal_window(chamber_ensemble):
    mixing = make_oam_mixing(OamModeSpec(insertion_loss_db=0.0, frequency_dependent=True), chamber_ensemble.grid, 13)
    mixed = apply_mixing(chamber_ensemble, mixing)
    taps = channel_to_impulse(mixed).taps
    causal = np.sum(np.abs(taps[:, :129]) ** 2) / np.sum(np.abs(taps) ** 2)
    modem = modem_channel(mixed, OfdmConfig())
    assert causal - 1e-12 <= modem.energy_kept <= 1.0
    result = run_link(mixed, OfdmConfig(), Constellation(), SnrPoint(gamma_db=30.0), 1, seed=3)
    assert result.impulse_energy_kept == pytest.approx(modem.energy_kept)


@pytest.mark.slow
def test_siso_awgn_matches_theory():
    channel = _constant_channel(np.ones((1, 1)), n_samples=100, count=201)
    gamma = SnrPoint(gamma_db=22.55)
    result = run_link(channel, OfdmConfig(n_streams=1), Constellation(), gamma, 12, seed=9)
    assert result.total_bits == 100 * 12 * 512 * 6
    assert result.ber == pytest.approx(float(theoretical_qam_ber_awgn(64, gamma.gamma_linear)), rel=0.05)


@pytest.mark.slow
def test_rayleigh_ber_slope(chamber_ensemble):
    results = sweep_link(chamber_ensemble, OfdmConfig(), Constellation(), [25.0, 30.0, 35.0], 2, seed=13)
    bers = [r.ber for r in results]
    assert bers[2] < 1e-2
    assert bers[0] > bers[1] > bers[2]
    fit = fit_ber_constant([(SnrPoint(gamma_db=r.gamma_db).gamma_linear, r.ber) for r in results], (25.0, 35.0))
    assert -1.15 <= fit.slope <= -0.85


@pytest.mark.slow
def test_lossless_mixing_keeps_ber(chamber_ensemble):
    mixing = make_oam_mixing(OamModeSpec(insertion_loss_db=0.0), chamber_ensemble.grid, seed=13)
    gamma = SnrPoint(gamma_db=30.0)
    without = run_link(chamber_ensemble, OfdmConfig(), Constellation(), gamma, 2, seed=13)
    with_oam = run_link(apply_mixing(chamber_ensemble, mixing), OfdmConfig(), Constellation(), gamma, 2, seed=13)
    spread = math.hypot(without.ber_std_error, with_oam.ber_std_error)
    assert abs(with_oam.mean_sample_ber - without.mean_sample_ber) <= 3 * spread
