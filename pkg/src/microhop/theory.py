"""Closed-form reference curves used to cross-check Monte-Carlo results."""

import math

import numpy as np
from scipy import integrate, optimize, special


def ser_noncoherent_orthogonal(M, symbol_snr):
    """Symbol error rate of noncoherent M-ary orthogonal signalling in AWGN.

    ``symbol_snr`` is Es/N0 of the whole symbol (linear). With the
    correct-bin envelope Rician and the ``M - 1`` others Rayleigh,

        SER = int_0^inf f_Rice(x) * (1 - (1 - exp(-x^2/2))^(M-1)) dx

    evaluated in a form that stays accurate for very small SER.
    """
    a = math.sqrt(2.0 * symbol_snr)

    def integrand(x):
        rice = x * math.exp(-0.5 * (x - a) ** 2) * special.i0e(a * x)
        tail = math.exp(-0.5 * x * x)
        if tail >= 1.0:
            return rice
        miss = -math.expm1((M - 1) * math.log1p(-tail))
        return rice * miss

    hi = a + 40.0
    pts = [max(a - 8.0, 0.0), a, a + 8.0]
    val, _ = integrate.quad(integrand, 0.0, hi, points=pts, limit=400,
                            epsabs=1e-300, epsrel=1e-10)
    return min(max(val, 0.0), 1.0)


def cfs_ser_theory(P, esn0_db):
    """SER of CFS demodulation for symbols of ``P`` samples at per-sample Es/N0."""
    return ser_noncoherent_orthogonal(P, P * 10 ** (esn0_db / 10))


def esn0_at_ser(P, target, lo=-40.0, hi=5.0):
    """Per-sample Es/N0 (dB) at which the theoretical SER equals ``target``."""
    f = lambda e: math.log10(max(cfs_ser_theory(P, e), 1e-300)) - math.log10(target)
    return optimize.brentq(f, lo, hi, xtol=1e-6)


def crossing_db(esn0_db, ser, target):
    """Interpolate measured ``(Es/N0, SER)`` points in log-SER to ``target``.

    Returns ``nan`` if the curve never brackets the target.
    """
    x = np.asarray(esn0_db, dtype=float)
    y = np.asarray(ser, dtype=float)
    lt = np.log10(target)
    for i in range(len(x) - 1):
        y0, y1 = y[i], y[i + 1]
        if y0 <= 0 or y1 <= 0:
            continue
        l0, l1 = np.log10(y0), np.log10(y1)
        if (l0 - lt) * (l1 - lt) <= 0 and l0 != l1:
            return float(x[i] + (lt - l0) * (x[i + 1] - x[i]) / (l1 - l0))
    return float("nan")
