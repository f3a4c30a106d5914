"""Spread-spectrum modulation, correlation demodulation and key scrambling.

Cyclic frequency shift (CFS) adds the data value to every frequency point
of the primary pattern; the receiver multiplies by the conjugate primary
symbol, which leaves a single tone at bin ``data``.

Cyclic time shift (CTS) rotates the primary symbol in time by ``data``
samples and is recovered from the lag of the circular correlation peak.

Secure modulation adds a private random pattern (the key) to the linear
pattern before phase accumulation. Only a reference built from the same
summed pattern collapses the product back to a single tone.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import spectral
from .errors import DataOutOfRange, SizeMismatch
from .hopping import (
    HoppingPattern,
    PhaseSeq,
    Symbol,
    linear_pattern,
    pattern_symbol,
    phase_accumulate,
    sum_pattern,
    synthesize,
)

DETECTION_THRESHOLD = 4.0


@dataclass(frozen=True)
class DemodResult:
    data: int
    peak_magnitude: float
    peak_to_mean_ratio: float

    @property
    def detected(self):
        return self.peak_to_mean_ratio >= DETECTION_THRESHOLD


def _check_data(data, m):
    if not 0 <= int(data) < m:
        raise DataOutOfRange(f"data {data} outside [0, {m})")


def _as_vec(x):
    return np.asarray(x, dtype=complex)


def shifted_pattern(p: HoppingPattern, data: int) -> HoppingPattern:
    """Every frequency point moved up by ``data``, wrapped modulo ``M``."""
    _check_data(data, p.m)
    return HoppingPattern((p.points + int(data)) % p.m, p.m, p.kind, p.root, p.seed)


def modulate_cfs(p: HoppingPattern, data: int) -> Symbol:
    """Cyclic frequency shift modulation, ``exp(2j*pi*cumsum(p + data)/M)``."""
    _check_data(data, p.m)
    num = np.cumsum(p.points + int(data), dtype=np.int64)
    return synthesize(PhaseSeq(num, p.m), p.kind, p.root)


def modulate_cfs_wrapped(p: HoppingPattern, data: int) -> Symbol:
    """Same symbol, built from the explicitly wrapped pattern ``mod(p + data, M)``."""
    return pattern_symbol(shifted_pattern(p, data))


def modulate_cts(p: HoppingPattern, data: int) -> Symbol:
    """Cyclic time shift modulation.

    The primary symbol is rotated by ``data`` samples. For odd ``M`` this
    equals accumulating the time-rotated pattern up to one constant phase;
    for even ``M`` the pattern route flips the sign of the samples after
    the wrap, so the symbol itself is rotated to keep the peak at ``M``.
    """
    _check_data(data, p.m)
    base = pattern_symbol(p)
    return Symbol(np.roll(base.samples, int(data)), p.kind, p.m, p.root)


def modulate_cts_pattern(p: HoppingPattern, data: int) -> Symbol:
    """Accumulate the circularly time-shifted pattern (odd ``M`` only matches CTS)."""
    _check_data(data, p.m)
    rolled = HoppingPattern(np.roll(p.points, int(data)), p.m, p.kind, p.root)
    return pattern_symbol(rolled)


def _result(corr):
    idx, mag = spectral.peak_search(corr)
    return DemodResult(idx, mag, spectral.peak_to_mean(corr, idx))


def demodulate_cfs(rx, ref) -> DemodResult:
    """Frequency-domain correlation demodulation; delay and CFO must be removed."""
    return _result(spectral.freq_correlation(_as_vec(rx), _as_vec(ref)))


def demodulate_cts(rx, ref) -> DemodResult:
    return _result(spectral.circular_cross_correlation(_as_vec(rx), _as_vec(ref)))


def demodulate_cfs_batch(rx, ref):
    """Vectorized CFS demodulation of a ``(trials, M)`` array.

    Returns ``(data, peak_magnitude)`` arrays; used by Monte-Carlo sweeps.
    """
    rx = np.atleast_2d(_as_vec(rx))
    mag = np.abs(spectral.freq_correlation(rx, _as_vec(ref)))
    idx = np.argmax(mag, axis=-1)
    return idx, mag[np.arange(len(idx)), idx]


def scramble(x, key):
    x, k = _as_vec(x), _as_vec(key)
    if x.shape[-1] != k.shape[-1]:
        raise SizeMismatch(f"lengths differ: {x.shape[-1]} vs {k.shape[-1]}")
    return x * k


def descramble(x, key):
    return scramble(x, np.conj(_as_vec(key)))


def modulate_secure(P: int, R: int, data: int, key: HoppingPattern) -> Symbol:
    """Linear CFS symbol with the key pattern added inside the accumulation.

    ``exp(2j*pi*cumsum(R*n + data + key[n]) / P)``
    """
    lin = linear_pattern(P, R)
    if key.m != P:
        raise SizeMismatch(f"key length {key.m} != P={P}")
    _check_data(data, P)
    num = np.cumsum(lin.points + int(data) + key.points, dtype=np.int64)
    return synthesize(PhaseSeq(num, P), "secure", R)


def make_sum_reference(P: int, R: int, key: HoppingPattern) -> Symbol:
    """Receiver reference accumulated from ``linear(P, R) + key``."""
    lin = linear_pattern(P, R)
    if key.m != P:
        raise SizeMismatch(f"key length {key.m} != P={P}")
    return synthesize(phase_accumulate(sum_pattern(lin, key)), "secure", R)


def bits_per_symbol(M: int) -> int:
    """``floor(log2(M))`` bits fit into one symbol of size ``M``."""
    return int(M).bit_length() - 1


def spreading_gain_db(M: int, bits: int | None = None) -> float:
    if bits is None:
        bits = bits_per_symbol(M)
    return 10 * math.log10(M / bits)
