"""OAM metasurfaces as a transmit-side mixing matrix.

The metasurfaces only redistribute complex amplitudes among the transmit branches, so in
the data domain they act as a per-frequency unitary M(f) scaled by the insertion loss.
Mode charges are carried along as labels.
"""

import numpy as np
from scipy.linalg import schur

from app.core.exceptions import DimensionMismatchError
from app.core.link.rng import Stream, complex_normal, stream_rng
from app.core.logging import logger
from app.schemas.channel import ChannelSet, FrequencyGrid
from app.schemas.oam import GramReport, MixingMatrix, OamModeSpec


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x n unitary from the QR decomposition of a complex Gaussian matrix.

    The phases of R's diagonal are moved into Q so that the distribution is exactly Haar.
    """
    z = complex_normal(rng, (n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def loss_amplitude(insertion_loss_db: float) -> float:
    """Amplitude factor for a power loss in dB."""
    return float(10.0 ** (-insertion_loss_db / 20.0))


def _geodesic_family(u0: np.ndarray, u1: np.ndarray, t: np.ndarray) -> np.ndarray:
    # u0^H u1 is normal, so its complex Schur form is diagonal: u0^H u1 = Z diag(e^{j theta}) Z^H
    tri, z = schur(u0.conj().T @ u1, output="complex")
    theta = np.angle(np.diagonal(tri))
    phases = np.exp(1j * np.outer(t, theta))
    return np.einsum("ab,bc,fc,dc->fad", u0, z, phases, z.conj())


def make_oam_mixing(spec: OamModeSpec, grid: FrequencyGrid, seed: int) -> MixingMatrix:
    """Build the mixing matrix for a metasurface set.

    Args:
        spec: Modes, insertion loss and whether the mixing varies with frequency.
        grid: Channel frequency grid; only its size matters for a frequency-dependent family.
        seed: Master seed; matrices come from the MIXING streams.

    Returns:
        MixingMatrix: One unitary per grid point (frequency_dependent) or a single flat one,
        with loss_scalar = 10^(-insertion_loss_db / 20).
    """
    n = spec.n_tx
    u0 = haar_unitary(n, stream_rng(seed, Stream.MIXING, 0))
    if spec.frequency_dependent:
        u1 = haar_unitary(n, stream_rng(seed, Stream.MIXING, 1))
        matrices = _geodesic_family(u0, u1, np.linspace(0.0, 1.0, grid.count))
    else:
        matrices = u0[np.newaxis]

    mixing = MixingMatrix(matrices=matrices, loss_scalar=loss_amplitude(spec.insertion_loss_db), modes=spec.modes)
    logger.debug(
        "oam_mixing_created",
        modes=spec.modes,
        n_matrices=matrices.shape[0],
        loss_scalar=mixing.loss_scalar,
        seed=seed,
    )
    return mixing


def apply_mixing(channel: ChannelSet, mixing: MixingMatrix, label: str = "with_oam") -> ChannelSet:
    """H'(s, f) = H(s, f) M(f) for every sample and frequency.

    Raises:
        DimensionMismatchError: If M does not match n_tx, or a frequency-dependent M does not match the grid.
    """
    if mixing.size != channel.n_tx or mixing.matrices.shape[-2] != channel.n_tx:
        raise DimensionMismatchError(
            f"mixing matrix is {mixing.matrices.shape[-2]}x{mixing.size}, channel has n_tx={channel.n_tx}",
            n_tx=channel.n_tx,
        )
    if mixing.frequency_dependent and mixing.matrices.shape[0] != channel.grid.count:
        raise DimensionMismatchError(
            f"mixing has {mixing.matrices.shape[0]} frequencies, channel grid has {channel.grid.count}",
            grid_count=channel.grid.count,
        )
    return channel.with_samples(channel.samples @ mixing.effective(), label=label)


def gram_matrices(channel: ChannelSet) -> np.ndarray:
    """Ensemble-averaged Gram matrix E{H H^H} per frequency, shape (F, n_rx, n_rx)."""
    h = channel.samples
    return np.einsum("sfrt,sfqt->frq", h, h.conj()) / channel.n_samples


def gram_invariance_check(a: ChannelSet, b: ChannelSet, tol: float = 1e-12) -> GramReport:
    """Compare E{H H^H} of two ensembles frequency by frequency.

    Raises:
        DimensionMismatchError: If the sets differ in dimensions or grid.
    """
    if (a.n_rx, a.n_tx, a.n_samples) != (b.n_rx, b.n_tx, b.n_samples) or not a.grid.matches(b.grid):
        raise DimensionMismatchError(
            f"cannot compare {a.label} {a.samples.shape} with {b.label} {b.samples.shape}",
            a=a.label,
            b=b.label,
        )
    per_frequency = np.max(np.abs(gram_matrices(a) - gram_matrices(b)), axis=(1, 2))
    max_deviation = float(per_frequency.max())
    passed = max_deviation <= tol
    logger.info("gram_invariance_checked", a=a.label, b=b.label, max_deviation=max_deviation, passed=passed)
    return GramReport(
        max_deviation=max_deviation,
        tolerance=tol,
        passed=passed,
        per_frequency_deviation=per_frequency,
    )
