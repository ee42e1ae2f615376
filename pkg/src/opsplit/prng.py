"""Deterministic pseudo-random number generation.

A fixed, portable stream is required so that benchmark problems are
bitwise reproducible across platforms and languages: the 64-bit SplitMix64
sequence, mapped to uniforms on (0, 1], with standard normals produced by
the Box-Muller transform in cosine/sine pairs.  Matrices are filled in
row-major order.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["SplitMix64"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream with uniform and Gaussian output.

    Parameters
    ----------
    seed:
        Any integer; only the low 64 bits are used.

    Examples
    --------
    >>> gen = SplitMix64(0)
    >>> hex(gen.next_u64())
    '0xe220a8397b1dcdaf'
    """

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK

    def next_u64(self) -> int:
        """Next raw 64-bit output."""
        self._state = (self._state + _GOLDEN) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform float in (0, 1] with 53-bit resolution.

        The upper end is included and zero excluded so the value is always
        a valid Box-Muller radius argument.
        """
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def normals(self, count: int) -> np.ndarray:
        """Vector of ``count`` standard normal draws.

        Draws are generated in cosine/sine pairs; for odd ``count`` the
        trailing sine partner is discarded, keeping the stream position a
        deterministic function of ``count``.
        """
        out = np.empty(2 * ((count + 1) // 2))
        for i in range(0, len(out), 2):
            radius = math.sqrt(-2.0 * math.log(self.uniform()))
            angle = 2.0 * math.pi * self.uniform()
            out[i] = radius * math.cos(angle)
            out[i + 1] = radius * math.sin(angle)
        return out[:count]

    def normal_matrix(self, rows: int, cols: int) -> np.ndarray:
        """Matrix of standard normals, filled row by row."""
        return self.normals(rows * cols).reshape(rows, cols)
