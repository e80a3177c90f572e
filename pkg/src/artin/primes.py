"""Segmented prime pipeline: consecutive primes with the factorization of p-1.

Primes are produced segment by segment with a classic segmented sieve; the
shifted values p-1 are factored with a batch factor sieve over the same
window (divide out every base prime q <= sqrt(hi) from its multiples; a
leftover cofactor > 1 must itself be prime).  Segments are independent, so
they can be sieved concurrently as long as delivery stays in ascending
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import BoundExceededError, DomainError

Factorization = tuple[tuple[int, int], ...]

DEFAULT_SEGMENT_SIZE = 1 << 20
# Streams refuse to run past this bound rather than silently degrade; the
# int64 factor sieve and the exact accumulators downstream are sized for it.
MAX_STREAM_BOUND = 1 << 48


@dataclass(frozen=True)
class Segment:
    """Half-open integer window [lo, hi)."""

    lo: int
    hi: int

    def __post_init__(self) -> None:
        if not 0 <= self.lo < self.hi:
            raise DomainError(f"need 0 <= lo < hi, got [{self.lo}, {self.hi})")


class PrimeRecord(NamedTuple):
    index: int
    p: int
    fact_pm1: Factorization


# Base primes (everything up to sqrt of the largest value seen) are sieved
# once and grown geometrically on demand.  Worker processes forked from a
# warm parent inherit the cache for free.
_base_limit = 0
_base_list: list[int] = []


def primes_upto(limit: int) -> list[int]:
    """All primes <= limit by a plain sieve (small limits only)."""
    if limit < 2:
        return []
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.nonzero(mask)[0].tolist()


def _ensure_base(limit: int) -> None:
    global _base_limit, _base_list
    if limit <= _base_limit:
        return
    new_limit = max(limit, 2 * _base_limit, 1 << 10)
    _base_list = primes_upto(new_limit)
    _base_limit = new_limit


def _segment_prime_mask(lo: int, hi: int) -> np.ndarray:
    _ensure_base(math.isqrt(hi - 1))
    n = hi - lo
    mask = np.ones(n, dtype=bool)
    if lo < 2:
        mask[: min(2 - lo, n)] = False
    for q in _base_list:
        if q * q >= hi:
            break
        start = max(q * q, ((lo + q - 1) // q) * q)
        if start < hi:
            mask[start - lo :: q] = False
    return mask


def sieve_segment(seg: Segment) -> list[int]:
    """Exactly the primes in [lo, hi), ascending."""
    mask = _segment_prime_mask(seg.lo, seg.hi)
    return (np.nonzero(mask)[0] + seg.lo).tolist()


def count_primes_in_segment(seg: Segment) -> int:
    return int(_segment_prime_mask(seg.lo, seg.hi).sum())


def segment_primes_and_factors(seg: Segment) -> tuple[list[int], list[Factorization]]:
    """Primes p in [lo, hi) together with the factorization of each p-1.

    The factor sieve walks multiples of every base prime q across the value
    window [lo-1, hi-1), but only positions belonging to a shifted prime are
    touched.  Exponents are extracted by repeated vectorized division.
    """
    lo, hi = seg.lo, seg.hi
    mask = _segment_prime_mask(lo, hi)
    pos = np.nonzero(mask)[0]
    m = int(pos.size)
    if m == 0:
        return [], []
    ps = pos + lo
    n = hi - lo
    vlo = lo - 1  # value at window index i is vlo + i; p-1 sits at index p - lo
    need = mask  # same alignment: index of p-1 in the value window equals p - lo
    slot = np.full(n, -1, dtype=np.int64)
    slot[pos] = np.arange(m)
    cof = np.zeros(n, dtype=np.int64)
    cof[pos] = ps - 1

    vmax = hi - 2
    _ensure_base(math.isqrt(max(vmax, 1)))
    qlists: list[list[tuple[int, int]]] = [[] for _ in range(m)]
    for q in _base_list:
        if q * q > vmax:
            break
        start = ((vlo + q - 1) // q) * q  # first multiple of q >= vlo
        idx = np.arange(start - vlo, n, q)
        idx = idx[need[idx]]
        if idx.size == 0:
            continue
        sub = cof[idx] // q
        ks = np.ones(idx.size, dtype=np.int64)
        while True:
            div = sub % q == 0
            if not div.any():
                break
            sub[div] //= q
            ks[div] += 1
        cof[idx] = sub
        for s, k in zip(slot[idx].tolist(), ks.tolist()):
            qlists[s].append((q, k))

    rest = cof[pos].tolist()
    facs: list[Factorization] = []
    for i in range(m):
        fl = qlists[i]
        c = rest[i]
        if c > 1:
            fl.append((c, 1))  # a survivor above sqrt(vmax) is prime
        facs.append(tuple(fl))
    return ps.tolist(), facs


def factor_shifted_segment(seg: Segment) -> dict[int, Factorization]:
    """Map each prime p in [lo, hi) to the factorization of p-1."""
    ps, facs = segment_primes_and_factors(seg)
    return dict(zip(ps, facs))


def _nth_prime_upper(n: int) -> int:
    """Upper bound for the n-th prime (Rosser-style; exact enough for guards)."""
    if n < 6:
        return 13
    x = n * (math.log(n) + math.log(math.log(n)))
    return int(x) + 1


def prime_record_stream(
    *,
    count: int | None = None,
    bound: int | None = None,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
) -> Iterator[PrimeRecord]:
    """Ordered stream of PrimeRecord for p_1, p_2, ...

    Stops after `count` records or once p would exceed `bound` (inclusive);
    exactly one stop condition must be given.  The generator restarts from
    p_1 = 2 on every call.
    """
    if (count is None) == (bound is None):
        raise DomainError("give exactly one of count= or bound=")
    if count is not None and count < 1:
        raise DomainError(f"count must be positive, got {count}")
    if bound is not None and bound < 1:
        raise DomainError(f"bound must be positive, got {bound}")
    if segment_size < 1:
        raise DomainError(f"segment_size must be positive, got {segment_size}")
    if bound is not None and bound > MAX_STREAM_BOUND:
        raise BoundExceededError(f"bound {bound} exceeds ceiling 2**48")
    if count is not None and _nth_prime_upper(count) > MAX_STREAM_BOUND:
        raise BoundExceededError(f"count {count} would pass the 2**48 ceiling")

    max_hi = bound + 1 if bound is not None else MAX_STREAM_BOUND
    idx = 0
    lo = 0
    while lo < max_hi:
        hi = min(lo + segment_size, max_hi)
        ps, facs = segment_primes_and_factors(Segment(lo, hi))
        for p, f in zip(ps, facs):
            idx += 1
            yield PrimeRecord(idx, p, f)
            if count is not None and idx == count:
                return
        lo = hi
    if count is not None:
        raise BoundExceededError(f"hit the 2**48 ceiling before {count} primes")
