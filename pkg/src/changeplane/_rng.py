"""Seed derivation helpers.

All randomness flows from integer seeds through ``numpy.random.SeedSequence``
so that nested work units (replicates, bootstrap draws, search iterations)
get independent streams that are reproducible regardless of execution order.
"""

from __future__ import annotations

import numpy as np


def child_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    """SeedSequence for the work unit addressed by ``key`` under ``seed``."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the work unit addressed by ``key`` under ``seed``."""
    return np.random.default_rng(child_sequence(seed, *key))


def derive_seed(seed: int, *key: int) -> int:
    """Collapse (seed, key) to a single int usable as another master seed."""
    state = child_sequence(seed, *key).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def as_generator(seed_or_rng: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(int(seed_or_rng))
