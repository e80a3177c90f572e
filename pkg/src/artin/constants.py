"""High-precision evaluation of the exact density constants.

Each target is an Euler product prod_p F(p) whose local factor tends to 1
like p^-2 or faster.  Direct multiplication converges far too slowly for
20 digits, so the tail is accelerated: with

    -log F(p) = sum_{m>=2} a_m p^-m        (exact rational a_m),

the product becomes

    log prod = sum_{p<=P0} log F(p) - sum_{m=2}^{M} a_m * (P(m) - sum_{p<=P0} p^-m)

where P(m) is the prime zeta function, itself evaluated from log-zeta values
by Moebius inversion.  All truncations carry explicit bounds which are
accumulated into the published error bound.

mpmath supplies the arbitrary-precision float type only; the zeta, prime
zeta and product evaluations are implemented here against their stated
contracts (mpmath's own zeta serves as an independent cross-check in the
test suite).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath
from mpmath import mp, mpf

from .arith import factorize, moebius
from .errors import DomainError
from .primes import primes_upto

DEFAULT_PRIME_CUTOFF = 100
_GUARD_DIGITS = 15

# Every local-factor family in scope is a ratio of monic integer polynomials
# whose roots all lie inside |z| <= golden ratio; 1.62 dominates them, which
# gives the rigorous coefficient bound |a_m| <= degree * 1.62^m / m used for
# the truncation tails (checked against the generated a_m in the tests).
_ROOT_RADIUS = "1.62"


@dataclass(frozen=True)
class HighPrecisionReal:
    """An arbitrary-precision value with a tracked absolute error bound."""

    value: mpmath.mpf
    err_bound: mpmath.mpf
    dps: int

    def scale_exact(self, c: Fraction | int) -> "HighPrecisionReal":
        """Multiply by an exact rational; the error bound scales with |c|."""
        c = Fraction(c)
        with mp.workdps(self.dps):
            v = self.value * c.numerator / c.denominator
            ulp = abs(v) * mpf(2) ** (5 - mp.prec)
            e = self.err_bound * abs(c.numerator) / c.denominator + ulp
            return HighPrecisionReal(v, e, self.dps)

    def digits_str(self, digits: int) -> str:
        return mpmath.nstr(self.value, digits)


def _ulp_slop(n_ops: int, magnitude: mpmath.mpf) -> mpmath.mpf:
    return (n_ops + 4) * (abs(magnitude) + 1) * mpf(2) ** (4 - mp.prec)


def _em_zeta_once(s: int, n_terms: int, target: mpmath.mpf):
    """One Euler-Maclaurin pass; returns (value, remainder bound) or (None, None).

    zeta(s) = sum_{n<N} n^-s + N^(1-s)/(s-1) + N^-s/2
              + sum_{j=1..J} B_2j/(2j)! * s(s+1)...(s+2j-2) * N^(1-s-2j) + R_J

    with |R_J| <= |T_{J+1}| for real s > 1 (the derivatives of n^-s keep a
    fixed sign, so the remainder is bounded by the first omitted term).
    """
    sm = mpf(s)
    acc = mpmath.fsum(mpf(n) ** (-sm) for n in range(1, n_terms))
    big_n = mpf(n_terms)
    acc += big_n ** (1 - sm) / (sm - 1)
    acc += big_n ** (-sm) / 2
    rising = sm  # holds s(s+1)...(s+2j-2)
    npow = big_n ** (-sm - 1)  # holds N^(1-s-2j)
    prev = None
    for j in range(1, 200):
        bp, bq = mpmath.bernfrac(2 * j)
        term = mpf(bp) / bq / mpmath.factorial(2 * j) * rising * npow
        size = abs(term)
        if size <= target:
            return acc, size
        if prev is not None and size >= prev:
            return None, None  # asymptotic series turned; need a larger N
        acc += term
        prev = size
        rising *= (sm + 2 * j - 1) * (sm + 2 * j)
        npow /= big_n * big_n
    return None, None


@functools.lru_cache(maxsize=None)
def zeta_integer(s: int, digits: int = 20) -> HighPrecisionReal:
    """Riemann zeta at integer s >= 2 with err_bound below 10^-digits."""
    if not isinstance(s, int) or s < 2:
        raise DomainError(f"zeta_integer needs integer s >= 2, got {s}")
    wp = digits + 12
    with mp.workdps(wp):
        target = mpf(10) ** (-(digits + 1))
        n_terms = max(8, int(0.7 * digits) + 4)
        while True:
            value, rem = _em_zeta_once(s, n_terms, target)
            if value is not None:
                err = rem + _ulp_slop(n_terms + 40, value)
                return HighPrecisionReal(value, err, wp)
            n_terms *= 2


@functools.lru_cache(maxsize=None)
def prime_zeta(m: int, digits: int = 20) -> HighPrecisionReal:
    """P(m) = sum_p p^-m via sum_{k>=1} mu(k)/k * log zeta(km).

    Truncated at the first k where zeta(km) - 1 < 10^-(digits+2); since
    zeta(x) - 1 < 2*2^-x the cutoff is taken as the analytic equivalent
    k > (digits + 3) / (m log10 2), with tail bound 4 * 2^-(k+1)m.
    """
    if not isinstance(m, int) or m < 2:
        raise DomainError(f"prime_zeta needs integer m >= 2, got {m}")
    wp = digits + 10
    with mp.workdps(wp):
        kmax = int((digits + 3) / (m * math.log10(2))) + 1
        acc = mpf(0)
        err = mpf(0)
        for k in range(1, kmax + 1):
            mu = moebius(k)
            if mu == 0:
                continue
            z = zeta_integer(k * m, digits + 4)
            lz = mp.log(z.value)
            acc += mpf(mu) * lz / k
            err += 2 * z.err_bound
        err += 4 * mpf(2) ** (-(kmax + 1) * m)
        err += _ulp_slop(3 * kmax, acc)
        return HighPrecisionReal(acc, err, wp)


@dataclass(frozen=True)
class LocalFactorSeries:
    """One Euler-product family: exact local factor plus its 1/p expansion.

    `x_coefficient(m)` is the coefficient of p^-m in x := 1 - F(p), so that
    -log F = -log(1-x) has the rational expansion produced by
    log_coefficients.  `degree` counts numerator plus denominator roots of
    the rational F and feeds the truncation-tail bound.
    """

    name: str
    degree: int
    local_factor: Callable[[int], Fraction]
    x_coefficient: Callable[[int], int]

    def log_coefficients(self, m_max: int) -> list[Fraction]:
        """a_2..a_max (index = m) with -log F(p) = sum a_m p^-m + O(p^-(m_max+1))."""
        x = [0] * (m_max + 1)
        for m in range(2, m_max + 1):
            x[m] = self.x_coefficient(m)
        acc = [Fraction(0)] * (m_max + 1)
        power = [Fraction(c) for c in x]
        t = 1
        while 2 * t <= m_max:
            inv_t = Fraction(1, t)
            for m in range(2 * t, m_max + 1):
                if power[m]:
                    acc[m] += power[m] * inv_t
            # power <- power * x, truncated at m_max
            nxt = [Fraction(0)] * (m_max + 1)
            for i in range(2 * t, m_max - 1):
                pi = power[i]
                if pi:
                    for j in range(2, m_max + 1 - i):
                        if x[j]:
                            nxt[i + j] += pi * x[j]
            power = nxt
            t += 1
        return acc

    def tail_bound(self, p0: int, m_max: int) -> mpmath.mpf:
        """Bound on |sum_{p>p0} sum_{m>m_max} a_m p^-m| (monotone in m_max)."""
        rho = mpf(_ROOT_RADIUS)
        ratio = rho / p0
        return (
            self.degree
            * p0
            * ratio ** (m_max + 1)
            / ((1 - ratio) * m_max * (m_max + 1))
        )


def artin_series() -> LocalFactorSeries:
    """F(p) = 1 - 1/(p(p-1)); x = sum_{m>=2} p^-m."""
    return LocalFactorSeries(
        name="artin",
        degree=4,
        local_factor=lambda p: 1 - Fraction(1, p * (p - 1)),
        x_coefficient=lambda m: 1 if m >= 2 else 0,
    )


def stephens_series() -> LocalFactorSeries:
    """F(p) = 1 - p/(p^3 - 1); x = sum_{j>=0} p^-(2+3j)."""
    return LocalFactorSeries(
        name="stephens",
        degree=6,
        local_factor=lambda p: 1 - Fraction(p, p**3 - 1),
        x_coefficient=lambda m: 1 if m >= 2 and m % 3 == 2 else 0,
    )


def rank_series(r: int) -> LocalFactorSeries:
    """F(p) = 1 - 1/(p^r (p-1)); x = sum_{m>=r+1} p^-m.  r=1 is the Artin family."""
    if r < 1:
        raise DomainError(f"rank must be >= 1, got {r}")
    return LocalFactorSeries(
        name=f"rank_{r}",
        degree=2 * r + 2,
        local_factor=lambda p: 1 - Fraction(1, p**r * (p - 1)),
        x_coefficient=lambda m: 1 if m >= r + 1 else 0,
    )


def euler_product(
    series: LocalFactorSeries,
    p0: int = DEFAULT_PRIME_CUTOFF,
    digits: int = 20,
) -> HighPrecisionReal:
    """Evaluate prod_p F(p) to `digits` certified digits.

    Direct rational logs up to p0, the rest through prime zeta values.  The
    subtraction P(m) - sum_{p<=p0} p^-m cancels severely (both sides are
    about 2^-m while the difference is about p0^-m), so each P(m) is
    computed with extra digits proportional to m before the cancellation.
    """
    if p0 < 3:
        raise DomainError(f"prime cutoff must be >= 3, got {p0}")
    if digits < 1:
        raise DomainError(f"digits must be positive, got {digits}")
    wp = digits + _GUARD_DIGITS
    plist = primes_upto(p0)
    with mp.workdps(wp):
        eps_goal = mpf(10) ** (-(digits + 5))
        m_max = 6
        while series.tail_bound(p0, m_max) > eps_goal:
            m_max += 2
            if m_max > 600:
                raise DomainError("tail bound does not close; cutoff too small")
        coeffs = series.log_coefficients(m_max)

        direct = mpf(0)
        for p in plist:
            f = series.local_factor(p)
            if f <= 0:
                raise DomainError(f"local factor not positive at p={p}")
            direct += mp.log(mpf(f.numerator) / f.denominator)
        err = _ulp_slop(3 * len(plist), mpf(1))

        tail = mpf(0)
        for m in range(2, m_max + 1):
            a_m = coeffs[m]
            if not a_m:
                continue
            # absolute accuracy needed on P(m) grows like |a_m| ~ 1.62^m
            dp_m = digits + 9 + int(m * 0.21) + 1
            pz = prime_zeta(m, dp_m)
            with mp.workdps(dp_m + 10):
                part = mpmath.fsum(mpf(p) ** (-m) for p in plist)
                p_gt = pz.value - part
            a_mpf = mpf(a_m.numerator) / a_m.denominator
            tail += a_mpf * p_gt
            err += abs(a_mpf) * (pz.err_bound + mpf(10) ** (-(dp_m + 4)))
        err += series.tail_bound(p0, m_max)

        log_total = direct - tail
        value = mp.exp(log_total)
        err_total = value * mp.expm1(err) + _ulp_slop(8, value)
        return HighPrecisionReal(value, err_total, wp)


@functools.lru_cache(maxsize=None)
def artin_constant(digits: int = 20) -> HighPrecisionReal:
    """A = prod_p (1 - 1/(p(p-1)))."""
    return euler_product(artin_series(), DEFAULT_PRIME_CUTOFF, digits)


@functools.lru_cache(maxsize=None)
def stephens_constant(digits: int = 20) -> HighPrecisionReal:
    """S = prod_p (1 - p/(p^3-1))."""
    return euler_product(stephens_series(), DEFAULT_PRIME_CUTOFF, digits)


@functools.lru_cache(maxsize=None)
def rank_constant(r: int, digits: int = 20) -> HighPrecisionReal:
    """A_r = prod_p (1 - 1/(p^r (p-1)))."""
    return euler_product(rank_series(r), DEFAULT_PRIME_CUTOFF, digits)


def _prime_divisors(n: int) -> list[int]:
    return [q for q, _ in factorize(n)]


def _discriminant_correction(gs) -> Fraction:
    """The 1 - mu(|d|) * prod ... factor shared by the plain and tilde forms."""
    mu = moebius(abs(gs.d))
    if mu == 0:
        return Fraction(1)
    prod = Fraction(1)
    for q in _prime_divisors(abs(gs.d)):
        if gs.h % q == 0:
            if q == 2:
                # Unreachable for valid inputs (2 | h forces a perfect
                # square), kept loud rather than silently conventional.
                raise DomainError("p=2 divides both d and h; correction undefined")
            prod *= Fraction(1, q - 2)
        else:
            prod *= Fraction(1, q * q - q - 1)
    return 1 - mu * prod


def artin_g_constant(gs, digits: int = 20) -> HighPrecisionReal:
    """Density constant for a specific g: the generic product with the
    exact rational corrections attached to h and to the field discriminant."""
    if gs.is_square:
        raise DomainError("perfect squares have density 0; no constant defined")
    base = artin_constant(digits + 5)
    corr = Fraction(1)
    for q in _prime_divisors(gs.h):
        # (1 - 1/(q-1)) / (1 - 1/(q(q-1)))
        corr *= Fraction((q - 2) * q, q * q - q - 1)
    return base.scale_exact(corr * _discriminant_correction(gs))


def artin_g_tilde(gs, digits: int = 20) -> HighPrecisionReal:
    """The restricted-ratio limit for g: drops the p | h local factors
    entirely, and drops the discriminant correction when d divides h."""
    if gs.is_square:
        raise DomainError("perfect squares have density 0; no constant defined")
    base = artin_constant(digits + 5)
    corr = Fraction(1)
    for q in _prime_divisors(gs.h):
        corr /= Fraction(q * q - q - 1, q * (q - 1))
    if gs.h % abs(gs.d) != 0:
        corr *= _discriminant_correction(gs)
    return base.scale_exact(corr)
