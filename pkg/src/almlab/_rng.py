"""Deterministic 64-bit mix generator for portable instance construction.

Benchmark instances must be reproducible bit-for-bit across platforms and
library versions, so they are built from this tiny generator instead of a
library RNG whose stream layout may change.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix-style 64-bit generator: equal seeds give equal streams anywhere."""

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float = -1.0, hi: float = 1.0) -> float:
        # top 53 bits give an exact double in [0, 1)
        u = (self.next_u64() >> 11) * 2.0 ** -53
        return lo + (hi - lo) * u

    def uniform_vector(self, n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
        return np.array([self.uniform(lo, hi) for _ in range(n)], dtype=float)

    def uniform_matrix(self, rows: int, cols: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
        # row-major fill order is part of the format
        return self.uniform_vector(rows * cols, lo, hi).reshape(rows, cols)
