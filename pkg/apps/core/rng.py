"""
Seeded random streams.

Every random draw in the toolkit comes from numpy's Philox (64-bit counter
based) bit generator, so a seed names one reproducible stream on every
platform. Per-task seeds are split off a base seed with SeedSequence, keyed by
integer coordinates, which keeps parallel experiments independent of the
order they run in.
"""

import numpy as np


def make_generator(seed: int) -> np.random.Generator:
    """Generator over the Philox stream named by seed."""
    return np.random.Generator(np.random.Philox(int(seed)))


def derive_seed(base_seed: int, *key: int) -> int:
    """64-bit child seed for the task at integer coordinates key."""
    sequence = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))
    return int(sequence.generate_state(1, np.uint64)[0])
