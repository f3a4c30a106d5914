"""Exact integer helpers: modular reduction, inverses and small primes.

All moduli used by the package are below 10**4, so plain Python ints are
exact and never overflow a signed 64-bit range in intermediate products.
"""

from math import isqrt

from .errors import ZeroOrNonInvertible


def mod_reduce(a: int, m: int) -> int:
    """Mathematical residue of ``a`` in ``[0, m)``, also for negative ``a``."""
    if m < 2:
        raise ValueError(f"modulus must be >= 2, got {m}")
    return int(a) % int(m)


def egcd(a: int, b: int):
    """Extended Euclid. Returns ``(g, x, y)`` with ``a*x + b*y == g``."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def inv_mod(a: int, m: int) -> int:
    """Multiplicative inverse of ``a`` modulo ``m``.

    Uses the extended Euclidean algorithm so that a composite modulus with
    a shared factor is rejected rather than silently producing garbage.

    Raises
    ------
    ZeroOrNonInvertible
        If ``a`` reduces to zero or shares a factor with ``m``.
    """
    r = mod_reduce(a, m)
    if r == 0:
        raise ZeroOrNonInvertible(f"{a} is zero modulo {m}")
    g, x, _ = egcd(r, m)
    if g != 1:
        raise ZeroOrNonInvertible(f"{a} is not invertible modulo {m} (gcd={g})")
    return x % m


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    for f in range(3, isqrt(n) + 1, 2):
        if n % f == 0:
            return False
    return True


def smallest_prime_above(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    p = max(int(n) + 1, 2)
    while not is_prime(p):
        p += 1
    return p


def center_signed(v: int, m: int) -> int:
    """Map a residue to the symmetric range ``[-(m-1)/2, (m-1)/2]``.

    >>> center_signed(16, 17)
    -1
    """
    v = mod_reduce(v, m)
    return v - m if v > (m - 1) // 2 else v
