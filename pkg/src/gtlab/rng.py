"""Counter-based random streams keyed by (seed, trial, role)."""

import numpy as np

DEFECTS = 0
DESIGN = 1
CHANNEL = 2


def stream(seed: int, trial: int, role: int) -> np.random.Generator:
    """Independent Philox stream for one role of one trial.

    The same ``(seed, trial, role)`` always yields the same stream, and
    streams for different keys do not overlap, so design randomness and
    channel noise can be replayed separately.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(trial), int(role)))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(base_seed: int, index: int) -> int:
    """64-bit seed for the ``index``-th run of a sweep."""
    ss = np.random.SeedSequence(int(base_seed) & (2**64 - 1), spawn_key=(int(index), 0xD5))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
