"""Streaming estimators for primitive-root density constants.

Every estimator folds a stream of (prime, factorization of p-1) pairs into
an EstimatorState.  Integer-sum kinds keep exact integer accumulators, so
partial states over disjoint prime ranges merge without any rounding; the
per-prime probability sums use compensated floating summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .arith import (
    GSpec,
    artin_rank_local,
    jacobi_symbol,
    multiplicative_order,
    stephens_local,
    subgroup_order,
    totient_from_factorization,
)
from .errors import ConfigError, NotReadyError
from .primes import Factorization, PrimeRecord

K_CAP = 3
RANK_CAP = 8

SIGMA_KINDS = frozenset({"classical_sigma", "moore_sigma", "stephens_sigma", "rank_sigma"})
RATIO_KINDS = frozenset({"ratio", "alt_ratio", "stephens_ratio", "rank_ratio"})
CENSUS_KINDS = frozenset({"census_primitive", "census_stephens", "census_rank"})
KINDS = SIGMA_KINDS | RATIO_KINDS | CENSUS_KINDS

_K_KINDS = frozenset({"ratio", "alt_ratio", "stephens_ratio", "rank_ratio"})
_R_KINDS = frozenset({"rank_sigma", "rank_ratio", "census_rank"})
_GSPEC_KINDS = frozenset({"moore_sigma", "census_primitive"})


@dataclass(frozen=True)
class EstimatorConfig:
    """Which estimator to run and with which parameters.

    `restricted` applies the quadratic-nonresidue filter (p odd, p not
    dividing g, (g/p) = -1, gcd(p-1, h) = 1) to the ratio kinds; the Moore
    sigma applies the same predicate implicitly through its weight.
    """

    kind: str
    k: int = 0
    r: int = 1
    gspec: Optional[GSpec] = None
    gs: Optional[tuple[int, ...]] = None
    restricted: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown estimator kind {self.kind!r}")
        if self.kind in _K_KINDS:
            if not 0 <= self.k <= K_CAP:
                raise ConfigError(f"k must be in 0..{K_CAP}, got {self.k}")
        elif self.k != 0:
            raise ConfigError(f"kind {self.kind!r} does not take k")
        if self.kind in _R_KINDS:
            if not 1 <= self.r <= RANK_CAP:
                raise ConfigError(f"r must be in 1..{RANK_CAP}, got {self.r}")
        elif self.r != 1:
            raise ConfigError(f"kind {self.kind!r} does not take r")
        if self.restricted:
            if self.kind not in ("ratio", "alt_ratio"):
                raise ConfigError(f"restricted filter does not apply to {self.kind!r}")
            if self.gspec is None:
                raise ConfigError("restricted estimators need a gspec")
            if self.gspec.is_square:
                raise ConfigError("perfect square has empty restricted sum")
        if self.kind in _GSPEC_KINDS and self.gspec is None:
            raise ConfigError(f"kind {self.kind!r} needs a gspec")
        if self.kind == "census_stephens":
            if self.gs is None or len(self.gs) != 2:
                raise ConfigError("census_stephens needs gs=(a, b)")
            if any(g == 0 for g in self.gs):
                raise ConfigError("census_stephens entries must be nonzero")
        elif self.kind == "census_rank":
            if self.gs is None or len(self.gs) != self.r:
                raise ConfigError("census_rank needs gs of length r")
            if any(g == 0 for g in self.gs):
                raise ConfigError("census_rank entries must be nonzero")
        elif self.gs is not None:
            raise ConfigError(f"kind {self.kind!r} does not take gs")


def _restricted_pass(p: int, g: int, h: int) -> bool:
    # The Legendre filter presumes odd p with p not dividing g; p = 2 and
    # p | g are skipped by convention.
    return (
        p != 2
        and g % p != 0
        and jacobi_symbol(g, p) == -1
        and (h == 1 or math.gcd(p - 1, h) == 1)
    )


class EstimatorState:
    """Value-semantics accumulator; see merge_partial for parallel folding."""

    __slots__ = (
        "config",
        "N_total",
        "N_used",
        "num_acc",
        "den_acc",
        "float_sum",
        "float_comp",
        "last_p",
        "_update",
    )

    def __init__(self, config: EstimatorConfig) -> None:
        self.config = config
        self.N_total = 0
        self.N_used = 0
        self.num_acc = 0
        self.den_acc = 0
        self.float_sum = 0.0
        self.float_comp = 0.0
        self.last_p = 0
        self._update = self._make_update()

    # -- construction of the per-kind hot path -------------------------------

    def _make_update(self) -> Callable[[int, Factorization], None]:
        cfg = self.config
        kind = cfg.kind
        tot = totient_from_factorization
        k = cfg.k
        if cfg.gspec is not None:
            g, h = cfg.gspec.g, cfg.gspec.h

        if kind == "classical_sigma":

            def upd(p: int, f: Factorization) -> None:
                self.N_used += 1
                self._add_float(tot(f) / (p - 1))

        elif kind == "moore_sigma":

            def upd(p: int, f: Factorization) -> None:
                if _restricted_pass(p, g, h):
                    self.N_used += 1
                    self._add_float(2 * tot(f) / (p - 1))

        elif kind in ("ratio", "alt_ratio"):
            restricted = cfg.restricted
            alt = kind == "alt_ratio"

            def upd(p: int, f: Factorization) -> None:
                if restricted and not _restricted_pass(p, g, h):
                    return
                t = tot(f)
                pm1 = p - 1
                if k:
                    if alt:
                        w = p ** (k - 1)
                        self.num_acc += w * pm1 * t
                        self.den_acc += w * p * pm1
                    else:
                        w = p**k
                        self.num_acc += w * t
                        self.den_acc += w * pm1
                else:
                    self.num_acc += t
                    self.den_acc += pm1
                self.N_used += 1

        elif kind == "stephens_sigma":

            def upd(p: int, f: Factorization) -> None:
                self.N_used += 1
                pm1 = p - 1
                self._add_float(stephens_local(f) / (pm1 * pm1))

        elif kind == "stephens_ratio":

            def upd(p: int, f: Factorization) -> None:
                pm1 = p - 1
                w = p**k if k else 1
                self.num_acc += w * stephens_local(f)
                self.den_acc += w * pm1 * pm1
                self.N_used += 1

        elif kind == "rank_sigma":
            r = cfg.r

            def upd(p: int, f: Factorization) -> None:
                self.N_used += 1
                self._add_float(artin_rank_local(f, r) / (p - 1) ** r)

        elif kind == "rank_ratio":
            r = cfg.r

            def upd(p: int, f: Factorization) -> None:
                w = p**k if k else 1
                self.num_acc += w * artin_rank_local(f, r)
                self.den_acc += w * (p - 1) ** r
                self.N_used += 1

        elif kind == "census_primitive":

            def upd(p: int, f: Factorization) -> None:
                if g % p == 0:
                    return
                self.N_used += 1
                self.den_acc += 1
                if multiplicative_order(g, p, f) == p - 1:
                    self.num_acc += 1

        elif kind == "census_stephens":
            a, b = cfg.gs  # type: ignore[misc]

            def upd(p: int, f: Factorization) -> None:
                if a % p == 0 or b % p == 0:
                    return
                self.N_used += 1
                self.den_acc += 1
                # b lies in <a> mod p iff ord(b) divides ord(a) (cyclic group)
                if multiplicative_order(a, p, f) % multiplicative_order(b, p, f) == 0:
                    self.num_acc += 1

        else:  # census_rank
            gs = cfg.gs

            def upd(p: int, f: Factorization) -> None:
                for g_i in gs:  # type: ignore[union-attr]
                    if g_i % p == 0:
                        return
                self.N_used += 1
                self.den_acc += 1
                if subgroup_order(gs, p, f) == p - 1:
                    self.num_acc += 1

        return upd

    # -- ingestion ------------------------------------------------------------

    def _add_float(self, x: float) -> None:
        # Kahan: fold the running compensation into the incoming value.
        y = x + self.float_comp
        s = self.float_sum
        t = s + y
        self.float_comp = y - (t - s)
        self.float_sum = t

    def ingest(self, rec: PrimeRecord) -> "EstimatorState":
        p = rec.p
        if p <= self.last_p:
            raise ConfigError(f"records must arrive with increasing p (got {p} after {self.last_p})")
        self._update(p, rec.fact_pm1)
        self.N_total += 1
        self.last_p = p
        return self

    def ingest_batch(self, ps: Sequence[int], facs: Sequence[Factorization]) -> None:
        """Fold a contiguous ascending run of primes (no record objects)."""
        if not ps:
            return
        if ps[0] <= self.last_p:
            raise ConfigError(f"batch starts at {ps[0]} but state is at {self.last_p}")
        upd = self._update
        for p, f in zip(ps, facs):
            upd(p, f)
        self.N_total += len(ps)
        self.last_p = ps[-1]

    # -- results --------------------------------------------------------------

    def snapshot(self) -> Fraction | float:
        """Current estimate: exact rational for ratio/census kinds, float for sigmas."""
        kind = self.config.kind
        if kind in RATIO_KINDS:
            if self.den_acc == 0:
                raise NotReadyError("no qualifying primes yet")
            return Fraction(self.num_acc, self.den_acc)
        if kind in CENSUS_KINDS:
            if self.N_used == 0:
                raise NotReadyError("no eligible primes yet")
            return Fraction(self.num_acc, self.N_used)
        if self.N_total == 0:
            raise NotReadyError("no primes ingested yet")
        return (self.float_sum + self.float_comp) / self.N_total

    # -- parallel folding ------------------------------------------------------

    def to_partial(self) -> tuple:
        return (
            self.N_total,
            self.N_used,
            self.num_acc,
            self.den_acc,
            self.float_sum,
            self.float_comp,
            self.last_p,
        )

    def merge_partial(self, part: tuple) -> None:
        """Fold a partial covering the prime range just above this state's."""
        n_total, n_used, num, den, fsum, fcomp, last_p = part
        if n_total == 0:
            return
        if last_p <= self.last_p:
            raise ConfigError(f"partial out of order: {last_p} after {self.last_p}")
        self.N_total += n_total
        self.N_used += n_used
        self.num_acc += num
        self.den_acc += den
        self._add_float(fsum)
        self._add_float(fcomp)
        self.last_p = last_p

    def merge(self, other: "EstimatorState") -> None:
        if other.config != self.config:
            raise ConfigError("cannot merge states with different configs")
        self.merge_partial(other.to_partial())


def make_estimator(cfg: EstimatorConfig) -> EstimatorState:
    """Zeroed state for cfg; raises ConfigError when cfg is invalid."""
    return EstimatorState(cfg)


def weight_profile(records: Iterable[PrimeRecord], k: int = 0) -> list[Fraction]:
    """Exact weights w_i = p_i^k (p_i - 1) / sum_j p_j^k (p_j - 1); sums to 1."""
    if not 0 <= k <= K_CAP:
        raise ConfigError(f"k must be in 0..{K_CAP}, got {k}")
    terms = [rec.p**k * (rec.p - 1) for rec in records]
    total = sum(terms)
    if total == 0:
        return []
    return [Fraction(t, total) for t in terms]


def checkpoint_schedule(n_max: int, points_per_decade: int = 8) -> list[int]:
    """Geometrically spaced checkpoint counts from 10 to n_max, n_max included."""
    if n_max < 1:
        raise ConfigError(f"n_max must be positive, got {n_max}")
    if points_per_decade < 1:
        raise ConfigError("points_per_decade must be positive")
    if n_max < 10:
        return [n_max]
    vals = set()
    j = points_per_decade
    while True:
        n = round(10 ** (j / points_per_decade))
        if n > n_max:
            break
        vals.add(n)
        j += 1
    vals.add(n_max)
    return sorted(vals)


@dataclass(frozen=True)
class CheckpointRow:
    N_total: int
    N_used: int
    p_N: int
    estimate: Fraction | float
    target: object  # high-precision value (mpf); kept opaque here
    deviation: float


@dataclass
class CheckpointSeries:
    """Log-spaced convergence rows; the payload behind the deviation plots."""

    kind: str
    rows: list[CheckpointRow] = field(default_factory=list)

    def append(self, row: CheckpointRow) -> None:
        if self.rows and row.N_total <= self.rows[-1].N_total:
            raise ConfigError("checkpoint rows must have strictly increasing N_total")
        self.rows.append(row)
