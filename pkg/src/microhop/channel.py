"""Channel impairments: integer delay, carrier offset, gain, AWGN, user mixing.

Impairments are applied in the fixed order delay -> CFO -> gain -> noise.
Noise is specified per sample as Es/N0 with unit signal power, so the
per-sample complex noise variance is ``10**(-esn0_db/10)``.
"""

from dataclasses import asdict, dataclass
import math

import numpy as np


@dataclass(frozen=True)
class ChannelSpec:
    delay_samples: int = 0
    cfo_cycles_per_sample: float = 0.0
    esn0_db: float | None = None  # None means noiseless
    gain_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.delay_samples < 0:
            raise ValueError("delay_samples must be >= 0")
        if self.esn0_db is not None and not math.isfinite(self.esn0_db):
            raise ValueError("esn0_db must be finite (use None for noiseless)")

    def to_dict(self):
        d = asdict(self)
        if d["esn0_db"] is None:
            d["esn0_db"] = "noiseless"
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("esn0_db") == "noiseless":
            d["esn0_db"] = None
        return cls(**d)


def trial_rng(seed, trial=0):
    """Generator for one Monte-Carlo trial, derived from ``(seed, trial)``.

    The pair is fed to ``numpy.random.SeedSequence`` so trials are
    independent and do not depend on how they are scheduled.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def apply_delay(x, d, mode="linear", window=None):
    """Delay by ``d`` samples.

    ``linear`` prepends ``d`` zeros. ``circular`` rotates every block of
    ``window`` samples (the whole vector by default) by ``d``.
    """
    x = np.asarray(x, dtype=complex)
    d = int(d)
    if d < 0:
        raise ValueError("delay must be >= 0")
    if mode == "linear":
        return np.concatenate([np.zeros(d, dtype=complex), x])
    if mode == "circular":
        w = len(x) if window is None else int(window)
        if len(x) % w:
            raise ValueError(f"length {len(x)} is not a multiple of window {w}")
        return np.roll(x.reshape(-1, w), d, axis=1).reshape(-1)
    raise ValueError(f"unknown delay mode {mode!r}")


def apply_cfo(x, nu, n0=0):
    """Multiply by ``exp(2j*pi*nu*n)``, ``n`` counted from ``n0`` at x[0]."""
    x = np.asarray(x, dtype=complex)
    n = np.arange(n0, n0 + len(x))
    return x * np.exp(2j * np.pi * np.mod(nu * n, 1.0))


def apply_gain(x, gain_db):
    return np.asarray(x, dtype=complex) * 10 ** (gain_db / 20)


def noise_variance(esn0_db):
    return 10 ** (-esn0_db / 10)


def awgn(n, esn0_db, rng):
    sigma = math.sqrt(noise_variance(esn0_db) / 2)
    return sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def add_awgn(x, esn0_db, seed=0, check_power=True):
    """Add circular complex Gaussian noise at per-sample Es/N0.

    ``esn0_db=None`` (or ``+inf``) returns ``x`` unchanged. ``seed`` may be
    an int or a ``numpy.random.Generator``.
    """
    x = np.asarray(x, dtype=complex)
    if esn0_db is None or esn0_db == math.inf:
        return x.copy()
    if check_power:
        active = np.abs(x) > 0
        pw = np.mean(np.abs(x[active]) ** 2) if active.any() else 1.0
        if abs(pw - 1.0) > 0.01:
            raise ValueError(f"signal power {pw:.4f} is not unit (within 1%)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return x + awgn(len(x), esn0_db, rng)


def ebn0_from_esn0(esn0_db, P, SF):
    """Per-bit Eb/N0 for symbols of ``P`` samples carrying ``SF`` bits."""
    return esn0_db + 10 * math.log10(P / SF)


def esn0_from_ebn0(ebn0_db, P, SF):
    return ebn0_db - 10 * math.log10(P / SF)


def impair(x, spec: ChannelSpec, mode="linear", window=None, noise=True):
    y = apply_delay(x, spec.delay_samples, mode, window)
    y = apply_cfo(y, spec.cfo_cycles_per_sample)
    y = apply_gain(y, spec.gain_db)
    if noise and spec.esn0_db is not None:
        y = y + awgn(len(y), spec.esn0_db, np.random.default_rng(spec.seed))
    return y


def mix(users, esn0_db=None, seed=0, length=None):
    """Superpose users, each impaired by its own spec, then add one noise draw.

    Per-user ``esn0_db`` is ignored here; receiver noise is common to all
    users and referenced to unit power per user.
    """
    streams = [impair(x, spec, noise=False) for x, spec in users]
    n = max(len(s) for s in streams) if length is None else int(length)
    out = np.zeros(n, dtype=complex)
    for s in streams:
        out[:len(s)] += s[:n]
    if esn0_db is not None:
        out += awgn(n, esn0_db, np.random.default_rng(seed))
    return out
