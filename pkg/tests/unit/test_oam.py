"""Metasurface mixing: unitarity, loss handling and Gram invariance."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.exceptions import DimensionMismatchError
from app.core.link.detect import ergodic_capacity
from app.core.link.oam import (
    apply_mixing,
    gram_invariance_check,
    gram_matrices,
    haar_unitary,
    make_oam_mixing,
)
from app.core.link.rng import Stream, stream_rng
from app.schemas.channel import ChannelSet, FrequencyGrid
from app.schemas.link import SnrPoint
from app.schemas.oam import MixingMatrix, OamModeSpec


def _unitarity_error(matrices: np.ndarray) -> float:
    eye = np.eye(matrices.shape[-1])
    return float(np.max(np.abs(np.conj(np.swapaxes(matrices, -1, -2)) @ matrices - eye)))


@given(n=st.integers(min_value=1, max_value=6), seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_haar_unitary_is_unitary(n, seed):
    u = haar_unitary(n, stream_rng(seed, Stream.MIXING, 0))
    assert _unitarity_error(u) < 1e-12


def test_lossless_mixing_is_unitary_at_every_frequency():
    mixing = make_oam_mixing(OamModeSpec(insertion_loss_db=0.0), FrequencyGrid(), seed=1)
    assert mixing.matrices.shape == (201, 2, 2)
    assert mixing.loss_scalar == 1.0
    assert _unitarity_error(mixing.effective()) < 1e-12


def test_insertion_loss_scales_column_norms():
    mixing = make_oam_mixing(OamModeSpec(insertion_loss_db=2.0), FrequencyGrid(), seed=1)
    norms = np.linalg.norm(mixing.effective(), axis=-2)
    np.testing.assert_allclose(norms, 10 ** (-0.1), atol=1e-12)
    assert _unitarity_error(mixing.calibrated().effective()) < 1e-12


def test_mixing_is_deterministic():
    a = make_oam_mixing(OamModeSpec(), FrequencyGrid(), seed=8)
    b = make_oam_mixing(OamModeSpec(), FrequencyGrid(), seed=8)
    np.testing.assert_array_equal(a.matrices, b.matrices)


def test_flat_mixing_has_one_matrix():
    mixing = make_oam_mixing(OamModeSpec(frequency_dependent=False), FrequencyGrid(), seed=2)
    assert mixing.matrices.shape == (1, 2, 2)
    assert not mixing.frequency_dependent


def test_frequency_dependent_mixing_varies_smoothly():
    matrices = make_oam_mixing(OamModeSpec(), FrequencyGrid(), seed=3).matrices
    steps = np.max(np.abs(np.diff(matrices, axis=0)), axis=(1, 2))
    assert steps.max() < 0.1
    assert np.max(np.abs(matrices[-1] - matrices[0])) > 0.1


def test_identity_mixing_leaves_channel_unchanged(small_ensemble):
    mixed = apply_mixing(small_ensemble, MixingMatrix(matrices=np.eye(2)[np.newaxis]))
    np.testing.assert_array_equal(mixed.samples, small_ensemble.samples)
    assert mixed.label == "with_oam"


def test_mixing_identity_channel_gives_mixing_matrix():
    grid = FrequencyGrid(count=2)
    channel = ChannelSet(grid=grid, n_rx=2, n_tx=2, samples=np.broadcast_to(np.eye(2), (1, 2, 2, 2)).astype(complex))
    hadamard = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    mixed = apply_mixing(channel, MixingMatrix(matrices=hadamard[np.newaxis]))
    for f in range(2):
        np.testing.assert_allclose(mixed.samples[0, f], hadamard, atol=1e-15)


def test_sign_flip_mixing_keeps_capacity(small_ensemble):
    flip = MixingMatrix(matrices=np.diag([1.0, -1.0])[np.newaxis])
    gamma = SnrPoint(gamma_db=15.0)
    before = ergodic_capacity(small_ensemble, gamma).capacity_bps_hz
    after = ergodic_capacity(apply_mixing(small_ensemble, flip), gamma).capacity_bps_hz
    np.testing.assert_allclose(after, before, atol=1e-12)


def test_mixing_rejects_wrong_dimensions(small_ensemble):
    with pytest.raises(DimensionMismatchError):
        apply_mixing(small_ensemble, MixingMatrix(matrices=np.eye(3)[np.newaxis]))
    with pytest.raises(DimensionMismatchError):
        apply_mixing(small_ensemble, MixingMatrix(matrices=np.broadcast_to(np.eye(2), (5, 2, 2)).copy()))


def test_gram_invariance_under_unitary_mixing(small_ensemble, small_grid):
    mixing = make_oam_mixing(OamModeSpec(insertion_loss_db=0.0), small_grid, seed=5)
    report = gram_invariance_check(small_ensemble, apply_mixing(small_ensemble, mixing), tol=1e-12)
    assert report.passed
    assert report.max_deviation < 1e-12
    assert report.per_frequency_deviation.shape == (small_grid.count,)


def test_gram_deviation_under_insertion_loss(small_grid):
    rng = np.random.default_rng(0)
    samples = rng.standard_normal((3, 4, 2, 2)) + 1j * rng.standard_normal((3, 4, 2, 2))
    channel = ChannelSet(grid=FrequencyGrid(count=4), n_rx=2, n_tx=2, samples=samples)
    lossy = make_oam_mixing(OamModeSpec(insertion_loss_db=2.0, frequency_dependent=False), small_grid, seed=1)
    report = gram_invariance_check(channel, apply_mixing(channel, lossy), tol=1e-12)
    expected = (1 - 10 ** (-0.2)) * np.max(np.abs(gram_matrices(channel)))
    assert not report.passed
    assert report.max_deviation == pytest.approx(expected, rel=1e-9)


def test_gram_self_comparison_is_zero(small_ensemble):
    assert gram_invariance_check(small_ensemble, small_ensemble).max_deviation == 0.0


def test_gram_check_rejects_mismatched_sets(small_ensemble):
    other = small_ensemble.with_samples(small_ensemble.samples[:5])
    with pytest.raises(DimensionMismatchError):
        gram_invariance_check(small_ensemble, other)


def test_modes_must_be_distinct():
    with pytest.raises(ValueError):
        OamModeSpec(modes=[1, 1])
