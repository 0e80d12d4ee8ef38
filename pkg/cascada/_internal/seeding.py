"""
Seed derivation for reproducible random streams.

Every random draw in the library comes from a generator keyed by the global
seed, a stream label and positional keys (replication, scenario, round...),
so a scenario is reproducible no matter which process samples it or in what
order.
"""

from collections.abc import Sequence
from enum import IntEnum

import numpy as np

from cascada.types import SeedKey


class Stream(IntEnum):
    """Disjoint stream labels."""

    TRAIN = 1
    VALID = 2
    TEST = 3
    GREEDY = 4
    FRESH = 5
    ESTIMATE = 6
    GENERATOR = 7
    SIMULATION = 8


def seed_tuple(seed: SeedKey, *keys: int) -> tuple[int, ...]:
    """
    Flatten a seed and extra keys into one tuple of non-negative integers.

    Args:
        seed: An integer or a sequence of integers
        *keys: Extra keys appended in order

    Returns:
        The combined key tuple
    """
    base: Sequence[int] = (seed,) if isinstance(seed, int) else tuple(seed)
    combined = tuple(int(k) for k in (*base, *keys))
    if any(k < 0 for k in combined):
        raise ValueError(f"seed keys must be non-negative, got {combined}")
    return combined


def derive_rng(seed: SeedKey, *keys: int) -> np.random.Generator:
    """
    Create a generator for the stream identified by ``(seed, *keys)``.

    Args:
        seed: Global seed or an already-derived key tuple
        *keys: Stream label and positional keys

    Returns:
        A fresh numpy generator
    """
    return np.random.default_rng(np.random.SeedSequence(seed_tuple(seed, *keys)))
