"""Deterministic, platform-independent derivation of per-item RNG streams.

Sampling decisions are keyed by (master seed, item identity) instead of one
sequential stream, so results do not depend on iteration order or on how work
is split across workers. Python's built-in ``hash`` is salted per process and
must not be used here; we hash with BLAKE2b instead.
"""

from __future__ import annotations

import hashlib
import random
import struct

_MASK64 = 0xFFFFFFFFFFFFFFFF


def derive_seed(seed: int, *parts: str | int) -> int:
    """Mix a 64-bit master seed with identifying parts into a new 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", seed & _MASK64))
    for part in parts:
        data = str(part).encode("utf-8")
        h.update(struct.pack("<I", len(data)))
        h.update(data)
    return int.from_bytes(h.digest(), "little")


def derived_rng(seed: int, *parts: str | int) -> random.Random:
    """A fresh ``random.Random`` seeded from ``derive_seed(seed, *parts)``."""
    return random.Random(derive_seed(seed, *parts))
