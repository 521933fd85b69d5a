"""Stateless keyed random numbers.

Every draw is a pure function of an integer key tuple, which lets the nested
uniform permutation tree be realized lazily and replayed bit-for-bit.
The mixer is the splitmix64 finalizer applied field by field.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def keyed_hash(*fields, start=None) -> np.ndarray:
    """64-bit hash of the key tuple; fields broadcast like numpy arrays.

    ``keyed_hash(a, b, c) == keyed_hash(c, start=keyed_hash(a, b))``, so a
    shared key prefix can be hashed once.
    """
    with np.errstate(over="ignore"):
        h = np.zeros((), dtype=np.uint64) if start is None else np.asarray(start, dtype=np.uint64)
        for f in fields:
            f = np.asarray(f).astype(np.uint64)
            h = _mix(h + _GOLDEN + _mix(f + _GOLDEN))
        return np.asarray(h, dtype=np.uint64)


def keyed_integers(b, *fields, start=None) -> np.ndarray:
    """Uniform integers in {0, ..., b-1}; ``b`` may be an array."""
    h = keyed_hash(*fields, start=start) >> np.uint64(32)
    with np.errstate(over="ignore"):
        return ((h * np.asarray(b).astype(np.uint64)) >> np.uint64(32)).astype(np.int64)


def derive_seed(master: int, *fields) -> int:
    """A 63-bit child seed, e.g. one per replication."""
    return int(keyed_hash(master, *fields) >> np.uint64(1))
