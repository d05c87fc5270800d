"""Seeded random streams.

Every randomized routine takes an explicit ``numpy.random.Generator``.  The
generators built here sit on Philox, a counter-based bit generator, so
streams can be split deterministically for parallel work.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "split_rng"]


def make_rng(seed: int | np.random.Generator | None = 0) -> np.random.Generator:
    """Return a Philox-backed generator for a 64-bit seed.

    Passing an existing generator returns it unchanged.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def split_rng(rng: np.random.Generator, count: int) -> list[np.random.Generator]:
    """Derive ``count`` independent child streams from ``rng``."""
    seeds = rng.integers(0, 2**63 - 1, size=count, dtype=np.int64)
    return [make_rng(int(s)) for s in seeds]
