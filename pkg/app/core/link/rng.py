"""Counter-based random streams keyed by purpose and position.

Every random draw in the simulator comes from a Philox generator whose seed sequence is
``[master_seed, domain, *indices]``. A stream therefore depends only on its key, never on
the order in which streams are created, which keeps results identical under any degree
of parallelism.

Keys in use:
    CHANNEL, s, r, t   taps of stirring sample s, antenna pair (r, t)
    MIXING, j          j-th Haar unitary of the metasurface model
    BITS, s            payload bits for channel sample s
    NOISE, s, f, r     receiver noise for sample s, frame f, receive branch r
    AWGN               noise for a standalone awgn call made without a key
"""

from enum import IntEnum

import numpy as np

from app.core.exceptions import ConfigError


class Stream(IntEnum):
    """Stream domains."""

    CHANNEL = 0
    MIXING = 1
    BITS = 2
    NOISE = 3
    AWGN = 4


def stream_rng(seed: int, domain: Stream, *indices: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, domain, *indices)."""
    if seed < 0 or any(i < 0 for i in indices):
        raise ConfigError(f"seeds and stream indices must be non-negative, got seed={seed} indices={indices}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(domain), *map(int, indices)])))


def complex_normal(rng: np.random.Generator, size, variance: float | np.ndarray = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
