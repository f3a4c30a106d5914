"""Frame assembly and parsing plus link-budget arithmetic.

Frame layout (in samples)::

    | pilot Rx (P1) | pilot Ry (P1) | sync (P1) | data 0 (P) | data 1 (P) | ...

``P`` is the smallest prime above ``2**SF`` and ``P1`` the smallest prime
above ``2**(SF+1)``, so the preamble carries one more bit of spreading
gain than the data symbols. The sync symbol is the root-``R`` linear
symbol of size ``P1`` cyclically frequency shifted by the number of data
symbols in the frame. Data symbols are linear root-``R`` symbols of size
``P``, optionally secured by a key pattern that each symbol may read in
its own order.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import spectral
from .errors import BadRoot, PayloadTooLarge, SizeMismatch, SyncFieldInvalid
from .hopping import HoppingPattern, key_permuted_pattern, linear_pattern, pattern_symbol
from .modem import (
    DETECTION_THRESHOLD,
    demodulate_cfs,
    make_sum_reference,
    modulate_cfs,
    modulate_secure,
)
from .ntcore import smallest_prime_above
from .sync import Estimate, PilotConfig, build_pilot, compensate, estimate_stream


@dataclass(frozen=True)
class FrameConfig:
    SF: int
    R: int = 3
    key: HoppingPattern | None = None
    read_roots: tuple | None = None
    pilot_repeats: int = 1

    def __post_init__(self):
        if self.SF < 2:
            raise ValueError("SF must be >= 2")
        if not 1 <= self.R <= min(self.P, self.P1) - 1:
            raise BadRoot(f"root {self.R} outside [1, {min(self.P, self.P1) - 1}]")
        if self.key is not None and self.key.m != self.P:
            raise SizeMismatch(f"key length {self.key.m} != P={self.P}")
        if self.read_roots is not None:
            object.__setattr__(self, "read_roots", tuple(int(k) for k in self.read_roots))
            if not self.read_roots or any(not 1 <= k < self.P for k in self.read_roots):
                raise BadRoot(f"read roots must lie in [1, {self.P - 1}]")
        if self.pilot_repeats < 1:
            raise ValueError("pilot_repeats must be >= 1")

    @property
    def P(self):
        return smallest_prime_above(2 ** self.SF)

    @property
    def P1(self):
        return smallest_prime_above(2 ** (self.SF + 1))

    @property
    def max_payload_symbols(self):
        return 2 ** (self.SF + 1) - 1

    @property
    def pilot(self):
        return PilotConfig(self.P1, self.R)

    @property
    def preamble_length(self):
        return (2 * self.pilot_repeats + 1) * self.P1

    def frame_length(self, n_symbols):
        return self.preamble_length + n_symbols * self.P

    def symbol_key(self, j):
        """Key pattern for data symbol ``j`` (``None`` when unsecured)."""
        if self.key is None:
            return None
        if self.read_roots is None:
            return self.key
        k = self.read_roots[j % len(self.read_roots)]
        return key_permuted_pattern(self.key, k, self.P)


@dataclass
class ParsedFrame:
    bits: np.ndarray
    values: np.ndarray
    estimate: Estimate
    sync_value: int
    sync_ratio: float
    data_ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def low_confidence(self):
        """Indices of data symbols whose peak ratio is below the threshold."""
        return np.flatnonzero(self.data_ratios < DETECTION_THRESHOLD)


def pack_bits(bits, SF):
    """Group bits MSB-first into ``SF``-bit values; a short tail is zero padded."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size and ((bits < 0) | (bits > 1)).any():
        raise ValueError("bits must be 0 or 1")
    n = -(-bits.size // SF)
    padded = np.zeros(n * SF, dtype=np.int64)
    padded[:bits.size] = bits
    weights = 1 << np.arange(SF - 1, -1, -1, dtype=np.int64)
    return padded.reshape(n, SF) @ weights


def unpack_bits(values, SF):
    values = np.asarray(values, dtype=np.int64).ravel()
    shifts = np.arange(SF - 1, -1, -1, dtype=np.int64)
    return ((values[:, None] >> shifts) & 1).reshape(-1)


def build_frame(cfg: FrameConfig, bits) -> np.ndarray:
    values = pack_bits(bits, cfg.SF)
    n = len(values)
    if n > cfg.max_payload_symbols:
        raise PayloadTooLarge(f"{n} symbols exceed sync field limit {cfg.max_payload_symbols}")
    zx, zy = build_pilot(cfg.pilot)
    parts = [zx.samples, zy.samples] * cfg.pilot_repeats
    parts.append(modulate_cfs(linear_pattern(cfg.P1, cfg.R), n).samples)
    lin = linear_pattern(cfg.P, cfg.R)
    for j, v in enumerate(values):
        key = cfg.symbol_key(j)
        sym = modulate_cfs(lin, int(v)) if key is None else modulate_secure(cfg.P, cfg.R, int(v), key)
        parts.append(sym.samples)
    return np.concatenate(parts)


def data_references(cfg: FrameConfig, n):
    """``(n, P)`` array of per-symbol receiver references."""
    if cfg.key is None:
        ref = pattern_symbol(linear_pattern(cfg.P, cfg.R)).samples
        return np.broadcast_to(ref, (n, cfg.P))
    if cfg.read_roots is None:
        ref = make_sum_reference(cfg.P, cfg.R, cfg.key).samples
        return np.broadcast_to(ref, (n, cfg.P))
    return np.array([make_sum_reference(cfg.P, cfg.R, cfg.symbol_key(j)).samples
                     for j in range(n)]).reshape(n, cfg.P)


def parse_frame(stream, cfg: FrameConfig, threshold=DETECTION_THRESHOLD) -> ParsedFrame:
    """Detect, synchronize and demodulate the first frame in ``stream``.

    Raises
    ------
    NotDetected
        No pilot pair for this root was found.
    SyncFieldInvalid
        The sync symbol is undetectable or announces more data symbols than
        the stream holds.
    """
    est = estimate_stream(stream, cfg.pilot, threshold)
    y = compensate(stream, est)
    off = 2 * cfg.pilot_repeats * cfg.P1
    sync_ref = pattern_symbol(linear_pattern(cfg.P1, cfg.R)).samples
    if len(y) < off + cfg.P1:
        raise SyncFieldInvalid("stream ends inside the sync symbol")
    sync = demodulate_cfs(y[off:off + cfg.P1], sync_ref)
    if sync.peak_to_mean_ratio < threshold or sync.data > cfg.max_payload_symbols:
        raise SyncFieldInvalid(f"sync symbol undecodable (value {sync.data}, "
                               f"ratio {sync.peak_to_mean_ratio:.2f})")
    n = sync.data
    start = off + cfg.P1
    if len(y) < start + n * cfg.P:
        raise SyncFieldInvalid(f"sync announces {n} symbols but stream is too short")
    rx = y[start:start + n * cfg.P].reshape(n, cfg.P)
    corr = np.abs(spectral.freq_correlation(rx, data_references(cfg, n)))
    values = np.argmax(corr, axis=-1) if n else np.zeros(0, dtype=np.int64)
    peaks = corr[np.arange(n), values] if n else np.zeros(0)
    rest = (corr.sum(axis=-1) - peaks) / (cfg.P - 1) if n else np.zeros(0)
    ratios = np.divide(peaks, rest, out=np.full(n, np.inf), where=rest > 0)
    # values >= 2**SF are symbol errors; keep their low SF bits
    bits = unpack_bits(values & ((1 << cfg.SF) - 1), cfg.SF)
    return ParsedFrame(bits, values, est, n, sync.peak_to_mean_ratio, ratios)


def sensitivity_dbm(nf_db, bw_hz, ebno_db, SF, P):
    """Receiver sensitivity ``-174 + NF + 10log10(BW) + EbNo + 10log10(SF/P)``."""
    if bw_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return -174 + nf_db + 10 * math.log10(bw_hz) + ebno_db + 10 * math.log10(SF / P)
