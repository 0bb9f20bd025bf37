"""Exact integer arithmetic: primality, Legendre symbols and exact rational powers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "is_prime",
    "primes_in_range",
    "check_prime",
    "legendre_symbol",
    "legendre_table",
    "integer_root",
    "ceil_pow_frac",
    "floor_pow_frac",
]

# Bases that make Miller-Rabin deterministic for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_SMALL_PRIMES = _MR_BASES
_MAX_POWER_BITS = 4096


def is_prime(n: int) -> bool:
    """Deterministic primality test, exact for all 64-bit inputs."""
    n = int(n)
    if n < 2:
        return False
    for sp in _SMALL_PRIMES:
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primes_in_range(lo: int, hi: int) -> list[int]:
    """All primes ``p`` with ``lo <= p <= hi``, ascending."""
    lo, hi = int(lo), int(hi)
    if lo < 0 or hi < lo:
        raise ValueError(f"need 0 <= lo <= hi, got ({lo}, {hi})")
    return [n for n in range(max(lo, 2), hi + 1) if is_prime(n)]


def check_prime(p: int, minimum: int = 3) -> int:
    """Return ``int(p)`` or raise ``ValueError`` if it is not a prime >= minimum."""
    p = int(p)
    if p < minimum or not is_prime(p):
        raise ValueError(f"expected a prime >= {minimum}, got {p}")
    return p


def legendre_symbol(a: int, p: int) -> int:
    """Legendre symbol ``(a/p)`` via Euler's criterion.

    Returns 0 when ``p`` divides ``a``, +1 for nonzero quadratic residues
    and -1 otherwise.
    """
    check_prime(p, minimum=2)
    a = int(a) % p
    if a == 0:
        return 0
    if p == 2:
        return 1
    t = pow(a, (p - 1) // 2, p)
    return -1 if t == p - 1 else 1


@lru_cache(maxsize=64)
def _legendre_table_cached(p: int) -> np.ndarray:
    table = np.full(p, -1, dtype=np.int8)
    x = np.arange(1, (p - 1) // 2 + 1, dtype=np.int64)
    table[(x * x) % p] = 1
    table[0] = 0
    table.setflags(write=False)
    return table


def legendre_table(p: int) -> np.ndarray:
    """Read-only int8 array ``t`` with ``t[a] = (a/p)`` for ``0 <= a < p``."""
    return _legendre_table_cached(check_prime(p))


def integer_root(n: int, k: int) -> int:
    """Largest integer ``r`` with ``r**k <= n``."""
    n, k = int(n), int(k)
    if n < 0 or k < 1:
        raise ValueError("integer_root needs n >= 0 and k >= 1")
    if n < 2 or k == 1:
        return n
    # Newton iteration from an overestimate; monotone decreasing to the floor root.
    r = 1 << -(-n.bit_length() // k)
    while True:
        s = ((k - 1) * r + n // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def _power(p: int, num: int, den: int) -> int:
    p, num, den = int(p), int(num), int(den)
    if p < 1 or num < 0 or den < 1:
        raise ValueError(f"need p >= 1, num >= 0, den >= 1; got ({p}, {num}, {den})")
    if num * p.bit_length() > _MAX_POWER_BITS:
        raise OverflowError(f"{p}**{num} exceeds {_MAX_POWER_BITS} bits")
    return p**num


def ceil_pow_frac(p: int, num: int, den: int) -> int:
    """Exact ``ceil(p ** (num/den))`` using integer roots only."""
    n = _power(p, num, den)
    r = integer_root(n, den)
    return r if r**den == n else r + 1


def floor_pow_frac(p: int, num: int, den: int) -> int:
    """Exact ``floor(p ** (num/den))``."""
    return integer_root(_power(p, num, den), den)
