"""
Seed streams for reproducible parallel Monte Carlo.

Every random draw in the package comes from a generator returned by
`stream`, keyed by a master seed, a module tag and integer counters
(cell, replicate, split, ...). Streams for different keys are independent
and do not depend on how many other streams were requested, so results are
identical regardless of worker count or scheduling order.
"""

import zlib

import numpy as np

from qdaphase.errors import ParameterError

__all__ = ["stream", "seed_sequence"]


def seed_sequence(seed: int, tag: str, *indices: int) -> np.random.SeedSequence:
    """Build the SeedSequence for (seed, tag, indices)."""
    if seed < 0:
        raise ParameterError(f"seed must be non-negative, got {seed}")
    key = (zlib.crc32(tag.encode("utf-8")),) + tuple(int(i) for i in indices)
    return np.random.SeedSequence(entropy=int(seed), spawn_key=key)


def stream(seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Counter-based generator for one (tag, indices) slot of a master seed.

    Example:
        rng = stream(7, "phase", cell, rep)
    """
    return np.random.Generator(np.random.Philox(seed_sequence(seed, tag, *indices)))
