"""Seeded counter-based random streams.

Every stochastic routine draws from ``numpy.random.Philox`` (Philox4x64-10)
with a 128-bit key built from ``(seed, stream)``: key word 0 is the 64-bit
seed and key word 1 the 64-bit stream id.  The counter starts at zero.  A port
to another language reproduces the same sequence by using the same key and
reading 64-bit outputs in counter order, then applying numpy's documented
``Generator`` transforms.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _u64(x) -> int:
    x = int(x)
    if x < 0:
        raise ValueError("seeds and stream ids must be nonnegative")
    return x & _MASK64


def make_rng(seed, stream: int = 0) -> np.random.Generator:
    """Generator for the stream ``stream`` of master seed ``seed``."""
    if seed is None:
        raise ValueError("a seed is required for reproducible sampling")
    key = np.array([_u64(seed), _u64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_stream(*parts: int) -> int:
    """Fold several small integers (point index, chunk index, ...) into one stream id."""
    h = 0xCBF29CE484222325
    for p in parts:
        for byte in int(p).to_bytes(8, "little", signed=False):
            h ^= byte
            h = (h * 0x100000001B3) & _MASK64
    return h
