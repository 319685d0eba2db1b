"""Deterministic pseudo-randomness shared by the whole pipeline.

Everything that needs reproducible randomness (dataset splits, bootstrap
draws, feature pools, synthetic data, mock embeddings) runs off splitmix64
so that a given seed produces identical results on every platform.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """splitmix64 stream generator (Steele, Lea & Flood)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare_gauss: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def next_gauss(self) -> float:
        """Standard normal draw via Box-Muller (pairs cached)."""
        if self._spare_gauss is not None:
            value, self._spare_gauss = self._spare_gauss, None
            return value
        u1 = self.next_float()
        while u1 == 0.0:
            u1 = self.next_float()
        u2 = self.next_float()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_gauss = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, population: int, k: int) -> list[int]:
        """k distinct indices from range(population), via partial Fisher-Yates."""
        if not 0 <= k <= population:
            raise ValueError("k out of range")
        arr = list(range(population))
        for i in range(k):
            j = i + self.next_below(population - i)
            arr[i], arr[j] = arr[j], arr[i]
        return arr[:k]


def hash_bytes(data: bytes, seed: int = 0) -> int:
    """64-bit hash of a byte string: each byte is xor-absorbed into the
    running state and passed through the splitmix64 finalizer."""
    h = _mix((seed & _MASK64) ^ _GOLDEN)
    for b in data:
        h = _mix(((h ^ b) + _GOLDEN) & _MASK64)
    return h
