"""Seeded random streams.

Every worker (chain, path batch, draw batch) gets its own generator derived
from the master seed by :func:`split_seed`; results therefore do not depend
on how work is scheduled across threads.
"""
import numpy as np

_MASK = (1 << 64) - 1


def mix64(z):
    """splitmix64 finalizer on a 64-bit integer."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def split_seed(seed, index):
    """Child seed for worker ``index``: mix64(seed xor mix64(index))."""
    return mix64((int(seed) & _MASK) ^ mix64(int(index) & _MASK))


def stream(seed, index=None):
    """A ``numpy.random.Generator`` for the master seed or one of its children."""
    s = int(seed) & _MASK if index is None else split_seed(seed, index)
    return np.random.Generator(np.random.PCG64(s))


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("a seed or Generator is required (no entropy default)")
    return stream(int(rng))


def child_seed(rng):
    """Draw a 64-bit seed from a generator, used to fan out sub-streams."""
    return int(rng.integers(0, 2**63 - 1, dtype=np.int64))
