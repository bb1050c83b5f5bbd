"""Static SVG figures rendered from the result tables.

matplotlib is an optional extra (``plots``); it is imported lazily so the simulator runs
without it.
"""

from pathlib import Path
from typing import Sequence

import numpy as np

from app.core.logging import logger


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        logger.warning("plots_skipped", reason="matplotlib is not installed")
        return None
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "linksim"
    import matplotlib.pyplot as plt

    return plt


def _save(plt, fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.debug("plot_saved", path=str(path))
    return path


def plot_capacity(path: Path, frequencies: np.ndarray, with_oam: np.ndarray, without_oam: np.ndarray, gamma_db: float):
    """Ergodic capacity against frequency for both systems."""
    plt = _pyplot()
    if plt is None:
        return None
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(frequencies / 1e9, with_oam, label="with OAM")
    ax.plot(frequencies / 1e9, without_oam, "--", label="without OAM")
    ax.set_xlabel("Frequency [GHz]")
    ax.set_ylabel("Capacity [bps/Hz]")
    ax.set_title(f"Ergodic capacity at {gamma_db:g} dB reference SNR")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(plt, fig, path)


def plot_ber(
    path: Path,
    gamma_db: Sequence[float],
    with_oam: Sequence[float],
    without_oam: Sequence[float],
    reference: Sequence[float] | None = None,
):
    """Uncoded BER against reference SNR, with the K / gamma line when available."""
    plt = _pyplot()
    if plt is None:
        return None
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(gamma_db, np.where(np.asarray(with_oam) > 0, with_oam, np.nan), "o-", label="with OAM")
    ax.semilogy(gamma_db, np.where(np.asarray(without_oam) > 0, without_oam, np.nan), "s--", label="without OAM")
    if reference is not None:
        ax.semilogy(gamma_db, reference, "k:", label=r"$K\gamma^{-1}$")
    ax.set_xlabel("Reference SNR [dB]")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(plt, fig, path)


def plot_correlation(path: Path, frequencies: np.ndarray, with_oam: np.ndarray, without_oam: np.ndarray):
    """Transmit-side correlation magnitude against frequency."""
    plt = _pyplot()
    if plt is None:
        return None
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(frequencies / 1e9, with_oam, label="with OAM")
    ax.plot(frequencies / 1e9, without_oam, "--", label="without OAM")
    ax.set_xlabel("Frequency [GHz]")
    ax.set_ylabel("Correlation magnitude")
    ax.set_ylim(0, 1)
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(plt, fig, path)
