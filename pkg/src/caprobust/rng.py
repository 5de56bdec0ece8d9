"""Reproducible random streams.

All randomness flows through numpy's ``PCG64`` bit generator seeded by a
``SeedSequence``.  A stream is identified by a master seed plus a key path of
integers or strings; strings are mapped to integers with CRC-32 so that keys
are stable across platforms and Python versions.  Two streams with different
key paths are statistically independent, and a given (seed, key) pair always
yields the same draws.
"""

from __future__ import annotations

import zlib

import numpy as np

ALGORITHM = "numpy.PCG64/SeedSequence"


def _key_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream keys must be non-negative")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def seed_sequence(seed: int, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_int(k) for k in key))


def stream(seed: int, *key) -> np.random.Generator:
    """Return the generator for sub-stream ``key`` of master ``seed``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *key)))
