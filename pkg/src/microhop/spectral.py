"""Arbitrary-length DFT, circular correlation and peak search.

Symbol lengths are prime, so two transforms are provided: a direct
O(N^2) matrix DFT, used as the reference, and a Bluestein (chirp-z) path
that reduces the prime-length transform to a power-of-two convolution.
Both operate along the last axis, so a batch of symbols can be passed as
a 2-D array.
"""

from functools import lru_cache

import numpy as np

from .errors import SizeMismatch

DIRECT_MAX_N = 64


@lru_cache(maxsize=64)
def _dft_matrix(n):
    k = np.arange(n, dtype=np.int64)
    # integer reduction of k*n keeps the twiddle argument below 2*pi
    return np.exp(-2j * np.pi * (np.outer(k, k) % n) / n)


@lru_cache(maxsize=64)
def _bluestein_tables(n):
    k = np.arange(n, dtype=np.int64)
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    L = 1 << int(np.ceil(np.log2(2 * n - 1)))
    b = np.zeros(L, dtype=complex)
    b[:n] = np.conj(chirp)
    b[L - n + 1:] = np.conj(chirp[1:])[::-1]
    return chirp, L, np.fft.fft(b)


def dft_direct(x):
    x = np.asarray(x, dtype=complex)
    return x @ _dft_matrix(x.shape[-1]).T


def dft_bluestein(x):
    """Forward DFT of any length via Bluestein's chirp-z identity.

    ``k*n = (k^2 + n^2 - (k-n)^2) / 2`` turns the transform into a
    convolution with ``exp(i*pi*m^2/N)``, evaluated with radix-2 FFTs.
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    chirp, L, B = _bluestein_tables(n)
    a = np.zeros(x.shape[:-1] + (L,), dtype=complex)
    a[..., :n] = x * chirp
    conv = np.fft.ifft(np.fft.fft(a) * B)
    return conv[..., :n] * chirp


def dft(x, method="auto"):
    """Unnormalized forward DFT ``X[k] = sum_n x[n] exp(-2j*pi*k*n/N)``.

    Parameters
    ----------
    x : array_like
        Samples along the last axis, any length ``N >= 1``.
    method : {"auto", "direct", "bluestein"}
        ``auto`` uses the direct matrix for ``N <= 64``.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] < 1:
        raise ValueError("empty input")
    if method == "direct" or (method == "auto" and x.shape[-1] <= DIRECT_MAX_N):
        return dft_direct(x)
    if method in ("auto", "bluestein"):
        return dft_bluestein(x)
    raise ValueError(f"unknown method {method!r}")


def idft(X, method="auto"):
    """Inverse of :func:`dft`, including the ``1/N`` factor."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[-1]
    return np.conj(dft(np.conj(X), method)) / n


def _same_length(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[-1] != b.shape[-1]:
        raise SizeMismatch(f"lengths differ: {a.shape[-1]} vs {b.shape[-1]}")
    return a, b


def freq_correlation(rx, ref, method="auto"):
    """DFT of ``rx * conj(ref)``; a frequency shift of ``d`` bins peaks at ``d``."""
    rx, ref = _same_length(rx, ref)
    return dft(rx * np.conj(ref), method)


def circular_cross_correlation(x, y, method="auto"):
    """``c[tau] = sum_n x[n] * conj(y[(n - tau) mod N])`` via the transform domain."""
    x, y = _same_length(x, y)
    return idft(dft(x, method) * np.conj(dft(y, method)), method)


def circular_cross_correlation_direct(x, y):
    x, y = _same_length(x, y)
    n = x.shape[-1]
    return np.array([np.sum(x * np.conj(np.roll(y, tau))) for tau in range(n)])


def peak_search(v):
    """Index and magnitude of the largest-magnitude entry.

    Ties resolve to the lowest index (``np.argmax`` semantics).
    """
    mag = np.abs(np.asarray(v))
    idx = int(np.argmax(mag))
    return idx, float(mag[idx])


def peak_to_mean(v, idx=None):
    """Peak magnitude over the mean magnitude of all other bins."""
    mag = np.abs(np.asarray(v))
    if idx is None:
        idx = int(np.argmax(mag))
    if mag.size == 1:
        return np.inf
    rest = (mag.sum() - mag[idx]) / (mag.size - 1)
    return float(mag[idx] / rest) if rest > 0 else np.inf
