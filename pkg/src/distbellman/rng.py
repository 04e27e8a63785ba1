"""Keyed random streams.

Every stream is derived from a master seed and an integer key (for example
``(state, block)``), so results do not depend on how work is scheduled.
"""

from __future__ import annotations

import numpy as np

BLOCK = 8192


def stream(seed, *key: int) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        seq = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    else:
        seq = np.random.SeedSequence(seed, spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))


def blocks(n: int, size: int = BLOCK) -> list[tuple[int, int]]:
    """``(block index, block length)`` pairs covering ``n`` items."""
    return [(b, min(size, n - b * size)) for b in range(-(-n // size))]
