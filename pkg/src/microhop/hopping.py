"""Micro frequency hopping patterns and symbol synthesis.

A hopping pattern assigns one frequency point in ``[0, M)`` to each of the
``M`` samples of a symbol. Accumulating those frequencies over time gives
the phase, and the symbol is the unit-modulus exponential of that phase.

Phases are kept as integer numerators over the denominator ``M`` and only
reduced modulo ``M`` right before the exponential, so large cumulative sums
never reach the trig functions.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BadRoot, NotPrime, SizeMismatch
from .ntcore import inv_mod, is_prime

PATTERN_PRNG = "philox4x64-10"


@dataclass(frozen=True)
class HoppingPattern:
    points: np.ndarray
    m: int
    kind: str = "custom"
    root: int | None = None
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim != 1 or len(pts) != self.m:
            raise SizeMismatch(f"pattern length {pts.size} != m={self.m}")
        if self.m < 2:
            raise ValueError("pattern size must be >= 2")
        if pts.min() < 0 or pts.max() >= self.m:
            raise ValueError(f"pattern values must lie in [0, {self.m})")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.m

    def to_dict(self):
        d = {"m": self.m, "kind": self.kind, "points": self.points.tolist()}
        if self.root is not None:
            d["root"] = self.root
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["points"]), int(d["m"]), d.get("kind", "custom"),
                   d.get("root"), d.get("seed"))


@dataclass(frozen=True)
class PhaseSeq:
    """Accumulated phase in cycles, stored as ``numerators / m``."""

    numerators: np.ndarray
    m: int

    def as_fractions(self):
        return [Fraction(int(v), self.m) for v in self.numerators]

    def reduced(self):
        return np.mod(self.numerators, self.m)


@dataclass(frozen=True)
class Symbol:
    samples: np.ndarray
    kind: str = "custom"
    m: int | None = None
    root: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))
        if self.m is None:
            object.__setattr__(self, "m", len(self.samples))

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)

    def __len__(self):
        return len(self.samples)


def _check_root(P, R, require_prime=True):
    if require_prime and not is_prime(P):
        raise NotPrime(f"{P} is not prime")
    if not 1 <= R <= P - 1:
        raise BadRoot(f"root {R} outside [1, {P - 1}]")


def fisher_yates(n, rng):
    """In-place Fisher-Yates shuffle of ``0..n-1`` driven by ``rng``."""
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def pattern_rng(seed):
    """Counter-based Philox generator used for every random pattern."""
    return np.random.Generator(np.random.Philox(seed))


def random_pattern(M: int, seed) -> HoppingPattern:
    """Random permutation pattern of size ``M``.

    Deterministic for a fixed ``seed``: Fisher-Yates over a Philox-4x64
    stream (see ``PATTERN_PRNG``).
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    seed_val = seed if isinstance(seed, int) else None
    return HoppingPattern(fisher_yates(M, pattern_rng(seed)), M, "random", seed=seed_val)


def linear_pattern(P: int, R: int, require_prime: bool = True) -> HoppingPattern:
    """Linear pattern ``points[n] = (R * n) mod P``.

    With ``require_prime=False`` any size is accepted as long as ``R`` is a
    unit modulo ``P``; the pattern is then still a permutation.
    """
    _check_root(P, R, require_prime)
    if not require_prime:
        inv_mod(R, P)  # raises unless gcd(R, P) == 1
    pts = (R * np.arange(P, dtype=np.int64)) % P
    return HoppingPattern(pts, P, "linear", root=R)


def phase_accumulate(p: HoppingPattern) -> PhaseSeq:
    return PhaseSeq(np.cumsum(p.points, dtype=np.int64), p.m)


def synthesize(ph: PhaseSeq, kind="custom", root=None) -> Symbol:
    samples = np.exp(2j * np.pi * ph.reduced() / ph.m)
    return Symbol(samples, kind, ph.m, root)


def pattern_symbol(p: HoppingPattern) -> Symbol:
    """Shortcut for ``synthesize(phase_accumulate(p))`` keeping metadata."""
    return synthesize(phase_accumulate(p), p.kind, p.root)


def zc_closed_form(P: int, R: int) -> Symbol:
    """Zadoff-Chu form ``exp(i*pi*R*n*(n+1)/P)`` of the linear symbol.

    ``n*(n+1)`` is even, so the exponent is reduced as an integer modulo
    ``P`` before scaling, which keeps the argument small for large ``P``.
    """
    _check_root(P, R)
    n = np.arange(P, dtype=np.int64)
    num = (R * ((n * (n + 1) // 2) % P)) % P
    return Symbol(np.exp(2j * np.pi * num / P), "linear", P, R)


def sum_pattern(a: HoppingPattern, b: HoppingPattern) -> HoppingPattern:
    if a.m != b.m:
        raise SizeMismatch(f"pattern sizes differ: {a.m} vs {b.m}")
    root = None
    if a.kind == b.kind == "linear":
        root = (a.root + b.root) % a.m or None
    kind = "linear" if root else "sum"
    return HoppingPattern((a.points + b.points) % a.m, a.m, kind, root)


def read_order(k: int, P: int) -> np.ndarray:
    """Address map for keyed reads: ``order[addr] = inv(k*addr) mod P``.

    Address 0 has no inverse and is kept as a fixed point. The map is an
    involution, so reading twice with the same ``k`` restores the key.
    """
    if not is_prime(P):
        raise NotPrime(f"{P} is not prime")
    if not 1 <= k <= P - 1:
        raise BadRoot(f"read root {k} outside [1, {P - 1}]")
    order = np.zeros(P, dtype=np.int64)
    for addr in range(1, P):
        order[addr] = inv_mod(k * addr, P)
    return order


def key_permuted_pattern(key: HoppingPattern, k: int, P: int) -> HoppingPattern:
    if key.m != P:
        raise SizeMismatch(f"key length {key.m} != P={P}")
    return HoppingPattern(key.points[read_order(k, P)], P, key.kind, seed=key.seed)
