"""Joint time-delay / frequency-offset estimation from a dual-root pilot.

The pilot is two linear (Zadoff-Chu) symbols of prime size ``P1`` with
roots ``Rx = R`` and ``Ry = P1 - R``. A delay of ``To`` samples and a
frequency offset of ``Fo`` bins move the frequency-domain correlation peak
of root ``r`` to

    Px = (Fo - r * To) mod P1

which was confirmed by delaying a symbol and measuring the peak (see
``tests/test_sync.py::test_peak_sign_oracle``). With two roots the pair of
congruences is solved exactly:

    eTo = (Py - Px) * inv(Rx - Ry)   (mod P1)
    eFo = Px + Rx * eTo = Py + Ry * eTo   (mod P1), centred to +-(P1-1)/2
"""

from dataclasses import dataclass

import numpy as np

from . import spectral
from .errors import BadRoot, InconsistentPeaks, NotDetected, NotPrime, SizeMismatch
from .hopping import Symbol, zc_closed_form
from .modem import DETECTION_THRESHOLD
from .ntcore import center_signed, inv_mod, is_prime, mod_reduce

PEAK_SIGN = -1


@dataclass(frozen=True)
class PilotConfig:
    P1: int
    R: int

    def __post_init__(self):
        if not is_prime(self.P1) or self.P1 < 3:
            raise NotPrime(f"pilot size {self.P1} must be an odd prime")
        if not 1 <= self.R <= self.P1 - 1:
            raise BadRoot(f"root {self.R} outside [1, {self.P1 - 1}]")

    @property
    def rx(self):
        return self.R

    @property
    def ry(self):
        return self.P1 - self.R

    @property
    def inv_root_diff(self):
        return inv_mod(self.rx - self.ry, self.P1)


@dataclass(frozen=True)
class Estimate:
    eto: int
    efo: int
    P1: int
    peak_x: float = float("nan")
    peak_y: float = float("nan")
    ratio_x: float = float("nan")
    ratio_y: float = float("nan")
    start: int | None = None

    @property
    def cfo_cycles_per_sample(self):
        return self.efo / self.P1

    @property
    def frame_start(self):
        return self.eto if self.start is None else self.start


def build_pilot(cfg: PilotConfig) -> tuple[Symbol, Symbol]:
    return zc_closed_form(cfg.P1, cfg.rx), zc_closed_form(cfg.P1, cfg.ry)


def sum_cache_update(prev, cur):
    prev = np.asarray(prev, dtype=complex)
    cur = np.asarray(cur, dtype=complex)
    if prev.shape != cur.shape:
        raise SizeMismatch(f"cache shape {prev.shape} != {cur.shape}")
    return prev + cur


def dual_root_correlate(summed, cfg: PilotConfig):
    """Peak bins ``(Px, Py)`` of the summed window against both pilot roots."""
    summed = np.asarray(summed, dtype=complex)
    if summed.shape[-1] != cfg.P1:
        raise SizeMismatch(f"window length {summed.shape[-1]} != P1={cfg.P1}")
    zx, zy = build_pilot(cfg)
    px, _ = spectral.peak_search(spectral.freq_correlation(summed, zx))
    py, _ = spectral.peak_search(spectral.freq_correlation(summed, zy))
    return px, py


def solve_time_freq(px: int, py: int, cfg: PilotConfig) -> Estimate:
    P1 = cfg.P1
    eto = mod_reduce((py - px) * cfg.inv_root_diff, P1)
    efo_x = mod_reduce(px + cfg.rx * eto, P1)
    efo_y = mod_reduce(py + cfg.ry * eto, P1)
    if efo_x != efo_y:
        raise InconsistentPeaks(f"eFo from Px ({efo_x}) != eFo from Py ({efo_y})")
    return Estimate(eto, center_signed(efo_x, P1), P1)


def _coherent(samples, start, ref, efo, P1):
    seg = samples[start:start + P1]
    n = np.arange(start, start + P1)
    derot = np.exp(-2j * np.pi * np.mod(efo * n, P1) / P1)
    return abs(np.sum(seg * derot * np.conj(ref)))


def estimate_stream(samples, cfg: PilotConfig, threshold=DETECTION_THRESHOLD) -> Estimate:
    """Find the first pilot pair in a stream and estimate delay and offset.

    The stream is cut into consecutive ``P1``-sample windows and each window
    is added to the previous one (the symbol cache), so whatever the
    alignment, some summed window holds a full circular copy of each pilot
    root. A root counts as present when its correlation peak-to-mean ratio
    reaches ``threshold``. Because every window sees the same sub-window
    alignment, each root's peak bin is shared by all windows containing
    it, which lets the two roots be read from neighbouring windows.

    ``Estimate.eto`` is the delay modulo ``P1``; ``Estimate.start`` is the
    absolute index of the first pilot sample, resolved by testing the
    candidate window positions coherently after offset removal.
    """
    x = np.asarray(samples, dtype=complex)
    P1 = cfg.P1
    nwin = -(-len(x) // P1) + 1
    padded = np.zeros(nwin * P1, dtype=complex)
    padded[:len(x)] = x
    wins = padded.reshape(nwin, P1)
    sums = wins.copy()
    sums[1:] += wins[:-1]

    zx, zy = build_pilot(cfg)
    cx = np.abs(spectral.freq_correlation(sums, zx))
    cy = np.abs(spectral.freq_correlation(sums, zy))
    rest_x = (cx.sum(axis=1) - cx.max(axis=1)) / (P1 - 1)
    rest_y = (cy.sum(axis=1) - cy.max(axis=1)) / (P1 - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_x = np.where(rest_x > 0, cx.max(axis=1) / rest_x, np.inf)
        ratio_y = np.where(rest_y > 0, cy.max(axis=1) / rest_y, np.inf)
    ratio_x[cx.max(axis=1) == 0] = 0
    ratio_y[cy.max(axis=1) == 0] = 0

    for j in np.flatnonzero(ratio_x >= threshold):
        jy = max(range(j, min(j + 3, nwin)), key=lambda i: cy[i].max())
        if ratio_y[jy] < threshold:
            continue
        acc = cx[j] + (cx[j + 1] if j + 1 < nwin else 0)
        px = int(np.argmax(acc))
        py = int(np.argmax(cy[jy]))
        est = solve_time_freq(px, py, cfg)

        best, best_metric = None, -1.0
        for m in (j - 1, j):
            s = m * P1 + est.eto
            if s < 0 or s + 2 * P1 > len(padded):
                continue
            metric = (_coherent(padded, s, zx.samples, est.efo, P1)
                      + _coherent(padded, s + P1, zy.samples, est.efo, P1))
            if metric > best_metric:
                best, best_metric = s, metric
        if best is None:
            continue
        jx = j + 1 if j + 1 < nwin and cx[j + 1].max() > cx[j].max() else j
        return Estimate(est.eto, est.efo, P1, float(cx[jx].max()), float(cy[jy].max()),
                        float(ratio_x[jx]), float(ratio_y[jy]), int(best))
    raise NotDetected("no window passed the pilot detection threshold")


def compensate(samples, est: Estimate, P1: int | None = None):
    """Remove the estimated offset and drop everything before the frame start.

    The derotation uses the absolute stream index, matching a CFO applied
    from the start of the stream.
    """
    x = np.asarray(samples, dtype=complex)
    P1 = est.P1 if P1 is None else P1
    n = np.arange(len(x))
    y = x * np.exp(-2j * np.pi * np.mod(est.efo * n, P1) / P1)
    return y[est.frame_start:]
