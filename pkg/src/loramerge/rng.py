"""Counter-based uniform streams for reproducible random dropping.

Each (seed, model label, tensor name) triple keys an independent Philox
stream, so the value at flat index ``i`` is a pure function of the triple
and ``i``.  Results do not depend on evaluation order or thread count, and
permuting the input models leaves each model's stream attached to it.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .errors import ParameterError

_SEED_MAX = 2**64


def stream_key(seed: int, label: str, name: str) -> int:
    """Derive a 128-bit Philox key from the (seed, label, name) triple."""
    if not isinstance(seed, int) or not 0 <= seed < _SEED_MAX:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    digest = hashlib.blake2b(digest_size=16)
    digest.update(struct.pack("<Q", seed))
    for part in (label, name):
        data = part.encode("utf-8")
        # length-prefix each field so (label, name) pairs cannot collide
        digest.update(struct.pack("<Q", len(data)))
        digest.update(data)
    return int.from_bytes(digest.digest(), "little")


def uniform_stream(seed: int, label: str, name: str, count: int) -> np.ndarray:
    """Return ``count`` float64 uniforms in [0, 1) from the keyed stream."""
    bitgen = np.random.Philox(key=stream_key(seed, label, name))
    return np.random.Generator(bitgen).random(count)
