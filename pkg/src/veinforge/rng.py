"""Pinned deterministic randomness.

Every stochastic choice in the toolkit (splits, bootstraps, feature
subsampling, imposter sampling, synthetic data) flows through SplitMix64 so
that results are reproducible bit-for-bit across platforms and releases. The
constants below are part of the artifact contract; changing them changes
every derived artifact.

SplitMix64 step: state += 0x9E3779B97F4A7C15;
z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
z = (z ^ (z >> 27)) * 0x94D049BB133111EB; output z ^ (z >> 31).

String seeds are folded in with FNV-1a 64 over UTF-8 bytes
(offset 0xcbf29ce484222325, prime 0x100000001b3).
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of a string's UTF-8 bytes."""
    h = _FNV_OFFSET
    for b in text.encode("utf-8"):
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


class SplitMix64:
    """Deterministic 64-bit generator with a documented stream."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Integer in [0, n). Plain modulo; the tiny bias is acceptable and
        the mapping is part of the pinned contract."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def next_float(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_gauss(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Box-Muller, cosine branch only so one draw consumes exactly two
        uniforms."""
        u1 = self.next_float()
        u2 = self.next_float()
        # guard log(0); 2^-53 keeps the draw finite without skewing anything
        if u1 <= 0.0:
            u1 = 2.0 ** -53
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, descending index order."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n) via partial Fisher-Yates.

        Order of the returned list is the draw order, not sorted.
        """
        if not 0 <= k <= n:
            raise ValueError("need 0 <= k <= n")
        pool = list(range(n))
        for i in range(k):
            j = i + self.next_below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
