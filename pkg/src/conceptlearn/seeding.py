"""Deterministic RNG derivation.

Every random draw in the project flows from one global seed through named
substreams.  Tags are mixed via crc32 (stable across processes, unlike
hash()), so the same (seed, tags) always yields the same stream.
"""
from __future__ import annotations

import zlib

import numpy as np


def subseed(seed: int, *tags) -> np.random.SeedSequence:
    entropy = [int(seed) & 0xFFFFFFFF]
    for t in tags:
        if isinstance(t, (int, np.integer)):
            entropy.append(int(t) & 0xFFFFFFFF)
        else:
            entropy.append(zlib.crc32(str(t).encode()))
    return np.random.SeedSequence(entropy)


def rng_for(seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(subseed(seed, *tags))


def intseed(seed: int, *tags) -> int:
    """Derived integer seed, for interfaces that take a plain int."""
    return int(subseed(seed, *tags).generate_state(1, np.uint64)[0])
