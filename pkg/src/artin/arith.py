"""Pure number-theoretic functions.

Everything here is a total function of its (immutable) arguments, so all of
it is safe to call from concurrent workers.  Factorizations are tuples of
(prime, exponent) pairs in ascending prime order; the empty tuple stands
for n = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError

Factorization = tuple[tuple[int, int], ...]

# Trial division is used for user-supplied arguments (g, h, d, Moebius
# inputs).  These are small in practice; the cap keeps the worst case sane.
FACTOR_INPUT_CAP = 1 << 63

RANK_CAP = 8


def factorize(n: int) -> Factorization:
    """Factor n >= 1 by trial division (meant for user-scale inputs)."""
    if n < 1 or n >= FACTOR_INPUT_CAP:
        raise DomainError(f"factorize expects 1 <= n < 2**63, got {n}")
    out = []
    for q in (2, 3):
        if n % q == 0:
            k = 0
            while n % q == 0:
                n //= q
                k += 1
            out.append((q, k))
    q = 5
    step = 2
    while q * q <= n:
        if n % q == 0:
            k = 0
            while n % q == 0:
                n //= q
                k += 1
            out.append((q, k))
        q += step
        step = 6 - step
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def totient_from_factorization(f: Factorization) -> int:
    """Euler phi from a factorization; the empty factorization gives phi(1)=1."""
    t = 1
    for q, k in f:
        t *= q - 1
        if k > 1:
            t *= q ** (k - 1)
    return t


def moebius(n: int) -> int:
    """Moebius function: 0 on square factors, else (-1)**(number of primes)."""
    if n < 1:
        raise DomainError(f"moebius expects n >= 1, got {n}")
    if n == 1:
        return 1
    f = factorize(n)
    if any(k > 1 for _, k in f):
        return 0
    return -1 if len(f) % 2 else 1


def jacobi_symbol(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive n; the Legendre symbol when n is prime."""
    if n <= 0 or n % 2 == 0:
        raise DomainError(f"jacobi_symbol needs odd positive n, got {n}")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def perfect_power_decompose(g: int) -> tuple[int, int]:
    """Write g = g0**h with h maximal (h odd when g < 0); returns (g0, h)."""
    if abs(g) < 2:
        raise DomainError(f"perfect_power_decompose expects |g| >= 2, got {g}")
    fac = factorize(abs(g))
    h = 0
    for _, k in fac:
        h = math.gcd(h, k)
    if g < 0:
        while h % 2 == 0:
            h //= 2
    g0 = 1
    for q, k in fac:
        g0 *= q ** (k // h)
    return (-g0 if g < 0 else g0, h)


@dataclass(frozen=True)
class GSpec:
    """An integer g with its derived invariants.

    g = g0**h with h maximal; sqfree is the signed squarefree part of g;
    d is the discriminant of Q[sqrt(g)] (sqfree when sqfree = 1 mod 4,
    else 4*sqfree).  Perfect squares are constructible but flagged: the
    restricted estimators reject them.
    """

    g: int
    g0: int
    h: int
    sqfree: int
    d: int
    is_square: bool


def make_gspec(g: int) -> GSpec:
    if abs(g) < 2:
        raise DomainError(f"make_gspec expects |g| >= 2, got {g}")
    g0, h = perfect_power_decompose(g)
    sqfree = 1
    for q, k in factorize(abs(g)):
        if k % 2:
            sqfree *= q
    if g < 0:
        sqfree = -sqfree
    is_square = g > 0 and sqfree == 1
    d = sqfree if sqfree % 4 == 1 else 4 * sqfree
    return GSpec(g=g, g0=g0, h=h, sqfree=sqfree, d=d, is_square=is_square)


def stephens_local(f: Factorization) -> int:
    """Sum of d*phi(d) over divisors d of n, via the multiplicative product.

    Each local factor (q**(2k+1) + 1)/(q + 1) is an integer (alternating
    geometric sum), so the product is computed exactly.
    """
    s = 1
    for q, k in f:
        s *= (q ** (2 * k + 1) + 1) // (q + 1)
    return s


def artin_rank_local(f: Factorization, r: int) -> int:
    """Count of r-tuples over the cyclic group of order n that generate it."""
    if not 1 <= r <= RANK_CAP:
        raise DomainError(f"rank must be in 1..{RANK_CAP}, got {r}")
    a = 1
    for q, k in f:
        qr = q ** r
        a *= qr ** k - qr ** (k - 1)
    return a


def multiplicative_order(g: int, p: int, f: Factorization) -> int:
    """Least t >= 1 with g**t = 1 mod p, given the factorization of p-1."""
    if g % p == 0:
        raise DomainError(f"{p} divides {g}; order undefined")
    t = p - 1
    for q, _ in f:
        while t % q == 0 and pow(g, t // q, p) == 1:
            t //= q
    return t


def subgroup_order(gs: Sequence[int], p: int, f: Factorization) -> int:
    """Order of the subgroup of Z_p^* generated by gs (lcm of element orders)."""
    t = 1
    for g in gs:
        t = math.lcm(t, multiplicative_order(g, p, f))
    return t


def alt_totient_tower(f: Factorization, p: int, k: int) -> tuple[int, int]:
    """(phi(phi(p**(k+1))), phi(p**(k+1))) from the factorization of p-1.

    phi(p**(k+1)) = p**k * (p-1), and since gcd(p**k, p-1) = 1 the outer
    totient splits as phi(p**k) * phi(p-1).
    """
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    pm1 = p - 1
    den = p ** k * pm1
    num = totient_from_factorization(f)
    if k >= 1:
        num *= p ** (k - 1) * pm1
    return num, den


@dataclass(frozen=True)
class LocalFactor:
    """An exact rational local quantity at a prime, e.g. S(p)/(p-1)^2."""

    p: int
    num: int
    den: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)

    @classmethod
    def stephens(cls, p: int, f: Factorization) -> "LocalFactor":
        """Probability that one random residue lies in the subgroup of another."""
        return cls(p, stephens_local(f), (p - 1) ** 2)

    @classmethod
    def rank(cls, p: int, f: Factorization, r: int) -> "LocalFactor":
        """Probability that r random residues generate Z_p^*."""
        return cls(p, artin_rank_local(f, r), (p - 1) ** r)
