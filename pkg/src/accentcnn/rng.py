"""Seeded pseudo-random generator used everywhere randomness is needed.

The generator is splitmix64: a 64-bit counter advanced by a fixed odd
increment, with each output produced by a finalizing bit mixer.  It is tiny,
has no hidden global state, and produces the identical stream on every
platform and word size, which is what makes stores, shuffles, splits, and
weight initialization byte-reproducible across runs.

Because the counter advances by a constant, a block of n future outputs can
be computed in one vectorized pass (``mix(state + k * GAMMA)`` for
k = 1..n); the scalar and bulk paths yield the same stream.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_TWO53_INV = 2.0 ** -53


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Deterministic 64-bit generator; one instance per independent stream."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def next_float(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _TWO53_INV

    def uniforms(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """n uniform doubles in [low, high), vectorized but stream-identical
        to n calls of next_float()."""
        if n == 0:
            return np.empty(0, dtype=np.float64)
        ks = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + ks * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        self._state = (self._state + n * _GAMMA) & _MASK
        u = (z >> np.uint64(11)).astype(np.float64) * _TWO53_INV
        return low + u * (high - low)

    def normals(self, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """n standard-normal draws via Box-Muller on uniform pairs."""
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        # shift u1 off zero so log() stays finite
        u1 = (u[:pairs] * (1.0 - 2.0 ** -53)) + 2.0 ** -53
        u2 = u[pairs:]
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(2.0 * math.pi * u2)
        out[1::2] = r * np.sin(2.0 * math.pi * u2)
        return mean + std * out[:n]

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> np.ndarray:
        idx = list(range(n))
        self.shuffle(idx)
        return np.asarray(idx, dtype=np.int64)
