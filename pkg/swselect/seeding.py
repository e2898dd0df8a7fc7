"""
Seed mixing and per-key random substreams.

Every random decision in swselect draws from a ``numpy.random.Generator``
built from ``(seed, key)`` so that results never depend on evaluation order
or on how work is split across threads.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError

MASK64 = (1 << 64) - 1

# Stream tags, kept apart from row ids (which are non-negative and far smaller).
DIRECTIONS_STREAM = 0xD1EC_7100
KMEANS_STREAM = 0xC1A5_7E55
SPLIT_STREAM = 0x5B11_7000
MIXTURE_STREAM = 0x61C5_0000
NOISE_STREAM = 0x0015_E000
PAIRS_STREAM = 0x9A15_0000


def splitmix64(value: int) -> int:
    value = (value + 0x9E3779B97F4A7C15) & MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & MASK64
    return value ^ (value >> 31)


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidArgumentError(f'Seed must be an integer, got {seed!r}')
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise InvalidArgumentError(f'Seed must fit in 64 unsigned bits, got {seed!r}')
    return seed


def mix_seed(seed: int, key: int) -> int:
    """Combine a run seed and a stream key into one 64-bit seed."""
    return splitmix64(check_seed(seed) ^ splitmix64(int(key) & MASK64))


def substream(seed: int, key: int) -> np.random.Generator:
    return np.random.default_rng(mix_seed(seed, key))
