"""Deterministic random streams keyed by (seed, stream index)."""

import numpy as np


def make_stream(seed: int, index: int) -> np.random.Generator:
    """Independent PCG64 stream for the pair (seed, index).

    Streams never depend on how many threads consume them, so results are
    identical for any worker count.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))
