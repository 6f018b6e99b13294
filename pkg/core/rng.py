# core/rng.py
"""
Counter-based random streams.

Every random quantity is drawn from a NumPy Philox generator (4×64-bit
counter-based) whose 128-bit key is (seed, channel tag). Channels are
independent streams; within a channel samples are consumed in time order, so
sample t of channel c depends only on (seed, c, t) and the draw shape.
"""

from typing import Iterable

import numpy as np

CHANNELS = {
    "u": 1,             # inputs
    "w": 2,             # process noise
    "v": 3,             # measurement noise
    "A": 4,             # generator: band entries
    "C": 5,             # generator: output matrix
    "theta": 6,         # Monte Carlo directions
    "trial": 7,         # Monte Carlo designs
}

_MASK64 = (1 << 64) - 1


def stream(seed: int, channel: str, attempt: int = 0) -> np.random.Generator:
    """Generator for one (seed, channel, attempt) stream."""
    if channel not in CHANNELS:
        raise KeyError(f"unknown random channel '{channel}'")
    tag = (CHANNELS[channel] << 32) | (attempt & 0xFFFFFFFF)
    key = np.array([int(seed) & _MASK64, tag], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(*parts: int) -> int:
    """Deterministically mix integers into a fresh 64-bit seed."""
    entropy = [int(x) & _MASK64 for x in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def trial_seeds(seed: int, trials: int) -> Iterable[int]:
    """Per-trial seeds for Monte Carlo loops; independent of how trials are scheduled."""
    return [derive_seed(seed, k) for k in range(trials)]
