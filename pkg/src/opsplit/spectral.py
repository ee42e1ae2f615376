"""Discrete Fourier transforms and periodic spectral symbols.

The transform is an in-library iterative radix-2 decimation-in-time FFT,
O(M log M), with the forward convention ``X_k = sum_j x_j e^{-2 pi i jk/M}``
and the inverse carrying the ``1/M`` factor.  Helper symbols cover periodic
spectral differentiation on a uniform grid, with the Nyquist mode zeroed
for odd derivative orders.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "GridNotPowerOfTwo",
    "dft",
    "idft",
    "derivative_symbol",
    "wavenumbers",
]


class GridNotPowerOfTwo(ValueError):
    """Raised when a transform length is not a positive power of two."""


def _check_length(m: int) -> int:
    if m < 1 or m & (m - 1):
        raise GridNotPowerOfTwo(f"transform length must be a power of two, got {m}")
    return m.bit_length() - 1


def _bit_reversal(m: int, bits: int) -> np.ndarray:
    indices = np.arange(m)
    rev = np.zeros(m, dtype=np.intp)
    for b in range(bits):
        rev = (rev << 1) | ((indices >> b) & 1)
    return rev


def dft(x: np.ndarray) -> np.ndarray:
    """Forward transform of a length-2^k vector.

    Examples
    --------
    >>> dft(np.array([1.0, 0.0, 0.0, 0.0]))
    array([1.+0.j, 1.+0.j, 1.+0.j, 1.+0.j])
    """
    x = np.asarray(x, dtype=np.complex128)
    m = x.shape[0]
    bits = _check_length(m)
    data = x[_bit_reversal(m, bits)].copy()
    span = 1
    while span < m:
        twiddle = np.exp(-1j * np.pi * np.arange(span) / span)
        blocks = data.reshape(-1, 2 * span)
        top = blocks[:, :span].copy()
        bottom = blocks[:, span:] * twiddle
        blocks[:, :span] = top + bottom
        blocks[:, span:] = top - bottom
        span *= 2
    return data


def idft(x: np.ndarray) -> np.ndarray:
    """Inverse transform; ``idft(dft(x))`` recovers ``x`` to round-off."""
    x = np.asarray(x, dtype=np.complex128)
    return np.conj(dft(np.conj(x))) / x.shape[0]


def wavenumbers(m: int, length: float) -> np.ndarray:
    """Wavenumbers ``2 pi j / length`` in transform order.

    Mode index runs ``0, 1, ..., m/2 - 1, -m/2, ..., -1`` matching the
    layout of :func:`dft` output.
    """
    _check_length(m)
    modes = np.concatenate([np.arange(0, m // 2), np.arange(-m // 2, 0)])
    return 2.0 * np.pi * modes / length


def derivative_symbol(m: int, length: float, order: int) -> np.ndarray:
    """Multiplier ``(i k)^order`` for periodic spectral differentiation.

    For odd orders the Nyquist mode has no well-defined sign, so its
    multiplier is set to zero.
    """
    sym = (1j * wavenumbers(m, length)) ** order
    if order % 2:
        sym[m // 2] = 0.0
    return sym
