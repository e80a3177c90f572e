"""Checkpointed estimator runs: planning, (parallel) folding, CSV output.

A run is planned before any heavy work: a cheap prime-count pass fixes the
global index of every segment, so the checkpoint counts can be pinned to
exact positions inside segments.  Workers then fold disjoint sub-ranges
into partial states which the parent merges in ascending order.  The plan
depends only on the configuration, never on the worker count, which makes
the output byte-identical for any number of workers.
"""

from __future__ import annotations

import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Optional, TextIO

import mpmath
from mpmath import mp, mpf

from .constants import (
    HighPrecisionReal,
    artin_constant,
    artin_g_constant,
    artin_g_tilde,
    rank_constant,
    stephens_constant,
)
from .errors import BoundExceededError, ConfigError, NotReadyError
from .estimators import (
    CheckpointRow,
    CheckpointSeries,
    EstimatorConfig,
    checkpoint_schedule,
    make_estimator,
    weight_profile,
)
from .primes import (
    DEFAULT_SEGMENT_SIZE,
    MAX_STREAM_BOUND,
    Segment,
    count_primes_in_segment,
    prime_record_stream,
    segment_primes_and_factors,
)

CSV_HEADER = "N_total,N_used,p_N,estimate,target,deviation"
TARGET_DIGITS = 24
SIG_DIGITS = 18


class SegmentTask(NamedTuple):
    lo: int
    hi: int
    take: int  # primes to fold from this segment (ascending prefix)
    cuts: tuple[int, ...]  # local prime counts at which a checkpoint is due


@dataclass(frozen=True)
class RunPlan:
    tasks: tuple[SegmentTask, ...]
    checkpoints: tuple[int, ...]
    total: int


def build_run_plan(
    *,
    count: int | None = None,
    bound: int | None = None,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    points_per_decade: int = 8,
) -> RunPlan:
    """Fix segments, per-segment prime counts and checkpoint positions."""
    if (count is None) == (bound is None):
        raise ConfigError("give exactly one of count= or bound=")
    if bound is not None and bound > MAX_STREAM_BOUND:
        raise BoundExceededError(f"bound {bound} exceeds ceiling 2**48")
    max_hi = bound + 1 if bound is not None else MAX_STREAM_BOUND
    seg_counts: list[tuple[int, int, int]] = []
    cum = 0
    lo = 0
    while lo < max_hi:
        hi = min(lo + segment_size, max_hi)
        c = count_primes_in_segment(Segment(lo, hi))
        if count is not None and cum + c >= count:
            seg_counts.append((lo, hi, count - cum))
            cum = count
            break
        seg_counts.append((lo, hi, c))
        cum += c
        lo = hi
    if count is not None and cum < count:
        raise BoundExceededError(f"hit the 2**48 ceiling before {count} primes")
    if cum == 0:
        raise ConfigError("no primes in the requested range")

    schedule = checkpoint_schedule(cum, points_per_decade)
    tasks = []
    off = 0
    for lo, hi, take in seg_counts:
        if take == 0:
            continue
        cuts = tuple(c - off for c in schedule if off < c <= off + take)
        tasks.append(SegmentTask(lo, hi, take, cuts))
        off += take
    return RunPlan(tasks=tuple(tasks), checkpoints=tuple(schedule), total=cum)


def _fold_segment_task(args: tuple[EstimatorConfig, SegmentTask]) -> list[tuple]:
    """Worker: fold one segment, split at its checkpoint cuts."""
    cfg, task = args
    ps, facs = segment_primes_and_factors(Segment(task.lo, task.hi))
    if task.take < len(ps):
        ps = ps[: task.take]
        facs = facs[: task.take]
    bounds = list(task.cuts)
    if not bounds or bounds[-1] != task.take:
        bounds.append(task.take)
    parts = []
    prev = 0
    for b in bounds:
        st = make_estimator(cfg)
        st.ingest_batch(ps[prev:b], facs[prev:b])
        parts.append(st.to_partial())
        prev = b
    return parts


def _iter_task_results(
    cfg: EstimatorConfig, tasks: Iterable[SegmentTask], workers: int
) -> Iterator[list[tuple]]:
    args = [(cfg, t) for t in tasks]
    if workers <= 1 or len(args) <= 1:
        for a in args:
            yield _fold_segment_task(a)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_fold_segment_task, args, chunksize=1)


def sig_str(x, sig: int = SIG_DIGITS) -> str:
    """Deterministic decimal rendering with `sig` significant digits."""
    if isinstance(x, Fraction):
        with localcontext() as ctx:
            ctx.prec = sig
            d = Decimal(x.numerator) / Decimal(x.denominator)
        return str(d)
    if isinstance(x, float):
        with localcontext() as ctx:
            ctx.prec = sig
            d = +Decimal(x)
        return str(d)
    if isinstance(x, int):
        return str(x)
    return mpmath.nstr(x, sig)


def _deviation(estimate: Fraction | float, target: HighPrecisionReal) -> float:
    with mp.workdps(40):
        if isinstance(estimate, Fraction):
            e = mpf(estimate.numerator) / estimate.denominator
        else:
            e = mpf(estimate)
        return float(e / target.value - 1)


def target_for_config(cfg: EstimatorConfig, digits: int = TARGET_DIGITS) -> HighPrecisionReal:
    """The exact constant an estimator converges to.

    census_stephens is compared against the generic constant: the rational
    pair-specific correction factor is out of scope, so the target carries
    that documented caveat.
    """
    kind = cfg.kind
    if kind in ("stephens_sigma", "stephens_ratio", "census_stephens"):
        return stephens_constant(digits)
    if kind in ("rank_sigma", "rank_ratio", "census_rank"):
        return rank_constant(cfg.r, digits)
    if kind == "moore_sigma" or kind == "census_primitive":
        return artin_g_constant(cfg.gspec, digits)
    if kind in ("ratio", "alt_ratio") and cfg.restricted:
        if cfg.gspec.h == 1:
            return artin_g_constant(cfg.gspec, digits)
        return artin_g_tilde(cfg.gspec, digits)
    return artin_constant(digits)


@dataclass
class RunResult:
    series: CheckpointSeries
    target: HighPrecisionReal
    summary: str


def run_stream_job(
    cfg: EstimatorConfig,
    *,
    count: int | None = None,
    bound: int | None = None,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    points_per_decade: int = 8,
    workers: int = 1,
    out_path: Optional[str] = None,
    stdout: TextIO = sys.stdout,
) -> RunResult:
    """Fold the configured estimator over the requested primes.

    Writes one CSV row per checkpoint (incrementally, flushed as produced)
    and prints a final summary line.  Checkpoints where the estimator has
    no qualifying primes yet are skipped.
    """
    target = target_for_config(cfg)
    target_str = sig_str(target.value, SIG_DIGITS)
    plan = build_run_plan(
        count=count,
        bound=bound,
        segment_size=segment_size,
        points_per_decade=points_per_decade,
    )
    master = make_estimator(cfg)
    series = CheckpointSeries(kind=cfg.kind)
    pending = list(plan.checkpoints)

    out = open(out_path, "w", newline="") if out_path else None
    try:
        if out is not None:
            out.write(CSV_HEADER + "\n")
            out.flush()
        for parts in _iter_task_results(cfg, plan.tasks, workers):
            for part in parts:
                master.merge_partial(part)
                if pending and master.N_total == pending[0]:
                    pending.pop(0)
                    try:
                        est = master.snapshot()
                    except NotReadyError:
                        continue
                    dev = _deviation(est, target)
                    row = CheckpointRow(
                        N_total=master.N_total,
                        N_used=master.N_used,
                        p_N=master.last_p,
                        estimate=est,
                        target=target.value,
                        deviation=dev,
                    )
                    series.append(row)
                    if out is not None:
                        out.write(
                            f"{row.N_total},{row.N_used},{row.p_N},"
                            f"{sig_str(row.estimate)},{target_str},{sig_str(row.deviation)}\n"
                        )
                        out.flush()
    finally:
        if out is not None:
            out.close()

    try:
        final_est = master.snapshot()
        est_str = sig_str(final_est)
        dev_str = sig_str(_deviation(final_est, target))
    except NotReadyError:
        est_str = "n/a"
        dev_str = "n/a"
    summary = (
        f"kind={cfg.kind} N={master.N_total} estimate={est_str} "
        f"target={target_str} deviation={dev_str}"
    )
    print(summary, file=stdout)
    return RunResult(series=series, target=target, summary=summary)


def run_weights_job(
    *,
    k: int,
    count: int,
    out_path: Optional[str] = None,
    stdout: TextIO = sys.stdout,
) -> list[Fraction]:
    """Weight profile of the unrestricted ratio over the first `count` primes."""
    records = list(prime_record_stream(count=count))
    weights = weight_profile(records, k)
    if out_path:
        with open(out_path, "w", newline="") as out:
            out.write("i,p,weight\n")
            for rec, w in zip(records, weights):
                out.write(f"{rec.index},{rec.p},{sig_str(w)}\n")
    total = sum(weights)
    print(f"kind=weights k={k} N={count} sum={total}", file=stdout)
    return weights
