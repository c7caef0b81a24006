"""Deterministic seed derivation.

All randomness flows from one master seed through ``numpy.random.SeedSequence``
spawn keys, so a stream is a pure function of (seed, path of indices).
"""
import numpy as np


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0 or seed >= 2**64:
        from .errors import ParameterError

        raise ParameterError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def substream(seed, *path):
    """Generator for the substream of ``seed`` addressed by ``path``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(check_seed(seed), spawn_key=tuple(path))))


def derive_seed(seed, *path):
    """A 63-bit integer seed for the child stream addressed by ``path``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def partition_sizes(trials, partitions):
    """Split ``trials`` into ``partitions`` contiguous chunk sizes (larger first)."""
    base, extra = divmod(trials, partitions)
    return [base + (1 if i < extra else 0) for i in range(partitions)]
