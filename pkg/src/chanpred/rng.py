"""Deterministic, purpose-tagged random streams.

Every stochastic operation owns a stream derived from (seed, purpose tags), so
channel realizations, pilot noise, weight init, and shuffling can be toggled or
re-run independently without disturbing each other.
"""

from __future__ import annotations

import zlib

import numpy as np


def _encode(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8"))
    raise TypeError(f"stream tag must be int or str, got {type(tag).__name__}")


def stream(seed: int, *tags) -> np.random.Generator:
    """Return a Generator seeded from (seed, *tags); same inputs, same stream."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_encode(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *tags) -> int:
    """Collapse (seed, *tags) into a single reproducible integer seed."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_encode(t) for t in tags]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
