"""Command-line front end.

Subcommands: estimate (stream an estimator, write checkpoint CSV),
census (empirical densities by direct order computation), constant
(print exact constants), weights (ratio weight profile).

Exit codes: 0 success, 2 configuration errors, 3 runtime resource errors
(a partial CSV is flushed before exiting).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from typing import Optional

from .arith import make_gspec
from .constants import (
    artin_constant,
    artin_g_constant,
    artin_g_tilde,
    rank_constant,
    stephens_constant,
)
from .errors import BoundExceededError, ConfigError, DomainError
from .estimators import RANK_CAP, EstimatorConfig
from .primes import DEFAULT_SEGMENT_SIZE, MAX_STREAM_BOUND
from .runner import run_stream_job, run_weights_job

N_MAX_CEILING = 10**9
G_MAGNITUDE_CAP = 1 << 31
WORKERS_ENV = "ARTIN_WORKERS"

ESTIMATE_KINDS = (
    "classical_sigma",
    "moore_sigma",
    "ratio",
    "alt_ratio",
    "stephens_sigma",
    "stephens_ratio",
    "rank_sigma",
    "rank_ratio",
)


@dataclass
class RunConfig:
    """Validated CLI parameters for a streaming run."""

    estimator: EstimatorConfig
    count: Optional[int]
    bound: Optional[int]
    checkpoints: int
    out_path: str
    workers: int
    segment_size: int


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="artin",
        description="Streaming estimators and exact targets for Artin-type density constants.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_run_opts(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--n", type=int, help="stop after N primes")
        sp.add_argument("--bound", type=int, help="stop once p would exceed this bound")
        sp.add_argument("--checkpoints", type=int, default=8, help="checkpoints per decade (default 8)")
        sp.add_argument("--out", help="CSV output path (default: derived from the kind)")
        sp.add_argument(
            "--workers",
            type=int,
            default=None,
            help=f"segment worker processes (default ${WORKERS_ENV} or 1)",
        )
        sp.add_argument("--segment-size", type=int, default=DEFAULT_SEGMENT_SIZE)

    est = sub.add_parser("estimate", help="stream a summation or ratio estimator")
    est.add_argument("--kind", required=True, choices=ESTIMATE_KINDS)
    est.add_argument("--k", type=int, default=0, help="prime-power weight exponent (ratio kinds)")
    est.add_argument("--r", type=int, default=1, help=f"rank, 1..{RANK_CAP} (rank kinds)")
    est.add_argument("--g", type=int, help="the integer g (g-dependent kinds)")
    est.add_argument("--restricted", action="store_true", help="apply the quadratic-nonresidue filter")
    add_run_opts(est)

    cen = sub.add_parser("census", help="empirical densities by direct order computation")
    mode = cen.add_mutually_exclusive_group(required=True)
    mode.add_argument("--primitive", action="store_true", help="count primes where g is primitive")
    mode.add_argument("--stephens", action="store_true", help="count primes where b lies in <a>")
    mode.add_argument("--rank", type=int, metavar="R", help="count primes where g1..gR generate")
    cen.add_argument("--g", type=int, help="g for --primitive")
    cen.add_argument("--a", type=int, help="a for --stephens")
    cen.add_argument("--b", type=int, help="b for --stephens")
    cen.add_argument("--gs", help="comma-separated g1,...,gR for --rank")
    add_run_opts(cen)

    con = sub.add_parser("constant", help="print exact constants to a requested precision")
    which = con.add_mutually_exclusive_group(required=True)
    which.add_argument("--artin", action="store_true")
    which.add_argument("--stephens", action="store_true")
    which.add_argument("--rank", type=int, metavar="R")
    which.add_argument("--g", type=int)
    con.add_argument("--digits", type=int, default=20)

    wgt = sub.add_parser("weights", help="ratio weight profile over a prime prefix")
    wgt.add_argument("--k", type=int, default=0)
    wgt.add_argument("--n", type=int, required=True)
    wgt.add_argument("--out", help="CSV output path")
    return p


def _check_stop(args) -> tuple[Optional[int], Optional[int]]:
    if (args.n is None) == (args.bound is None):
        raise ConfigError("give exactly one of --n or --bound")
    if args.n is not None:
        if not 1 <= args.n <= N_MAX_CEILING:
            raise ConfigError(f"--n must be in 1..{N_MAX_CEILING}")
    if args.bound is not None:
        if not 2 <= args.bound <= MAX_STREAM_BOUND:
            raise ConfigError(f"--bound must be in 2..2**48")
    return args.n, args.bound


def _check_g(g: Optional[int], needed: bool):
    if g is None:
        if needed:
            raise ConfigError("this kind needs --g")
        return None
    if abs(g) > G_MAGNITUDE_CAP:
        raise ConfigError("|g| above 2**31 is out of scope")
    return make_gspec(g)


def _run_common(args, est_cfg: EstimatorConfig, default_name: str) -> int:
    count, bound = _check_stop(args)
    if args.checkpoints < 1:
        raise ConfigError("--checkpoints must be positive")
    if args.segment_size < 1 << 10:
        raise ConfigError("--segment-size must be at least 1024")
    workers = args.workers if args.workers is not None else _default_workers()
    if workers < 1:
        raise ConfigError("--workers must be positive")
    out_path = args.out if args.out else default_name
    run_stream_job(
        est_cfg,
        count=count,
        bound=bound,
        segment_size=args.segment_size,
        points_per_decade=args.checkpoints,
        workers=workers,
        out_path=out_path,
    )
    return 0


def _cmd_estimate(args) -> int:
    kind = args.kind
    g_needed = kind == "moore_sigma" or args.restricted
    gspec = _check_g(args.g, g_needed) if (args.g is not None or g_needed) else None
    cfg = EstimatorConfig(
        kind=kind,
        k=args.k if kind in ("ratio", "alt_ratio", "stephens_ratio", "rank_ratio") else 0,
        r=args.r if kind in ("rank_sigma", "rank_ratio") else 1,
        gspec=gspec,
        restricted=args.restricted,
    )
    return _run_common(args, cfg, f"artin_estimate_{kind}.csv")


def _cmd_census(args) -> int:
    if args.primitive:
        gspec = _check_g(args.g, needed=True)
        cfg = EstimatorConfig(kind="census_primitive", gspec=gspec)
        name = f"artin_census_primitive.csv"
    elif args.stephens:
        if args.a is None or args.b is None:
            raise ConfigError("--stephens needs --a and --b")
        cfg = EstimatorConfig(kind="census_stephens", gs=(args.a, args.b))
        name = "artin_census_stephens.csv"
    else:
        if args.gs is None:
            raise ConfigError("--rank needs --gs g1,...,gR")
        try:
            gs = tuple(int(x) for x in args.gs.split(","))
        except ValueError:
            raise ConfigError(f"could not parse --gs {args.gs!r}")
        cfg = EstimatorConfig(kind="census_rank", r=args.rank, gs=gs)
        name = "artin_census_rank.csv"
    return _run_common(args, cfg, name)


def _cmd_constant(args) -> int:
    d = args.digits
    if not 1 <= d <= 60:
        raise ConfigError("--digits must be in 1..60")
    if args.artin:
        c = artin_constant(d)
        print(f"A = {c.digits_str(d)}  [err <= {c.err_bound}]")
    elif args.stephens:
        c = stephens_constant(d)
        print(f"S = {c.digits_str(d)}  [err <= {c.err_bound}]")
    elif args.rank is not None:
        if not 1 <= args.rank <= RANK_CAP:
            raise ConfigError(f"--rank must be in 1..{RANK_CAP}")
        c = rank_constant(args.rank, d)
        print(f"A_{args.rank} = {c.digits_str(d)}  [err <= {c.err_bound}]")
    else:
        gspec = _check_g(args.g, needed=True)
        a = artin_g_constant(gspec, d)
        print(f"A({args.g}) = {a.digits_str(d)}  [err <= {a.err_bound}]")
        if gspec.h > 1:
            t = artin_g_tilde(gspec, d)
            print(f"A~({args.g}) = {t.digits_str(d)}  [err <= {t.err_bound}]")
    return 0


def _cmd_weights(args) -> int:
    if not 1 <= args.n <= 10**7:
        raise ConfigError("--n must be in 1..10**7 for weight profiles")
    run_weights_job(k=args.k, count=args.n, out_path=args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "census":
            return _cmd_census(args)
        if args.command == "constant":
            return _cmd_constant(args)
        return _cmd_weights(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BoundExceededError, OverflowError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
