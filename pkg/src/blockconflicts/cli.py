"""Command line: fetch -> analyze -> simulate -> report, plus synthetic gen.

Exit codes: 0 success, 1 data/runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .conflicts import analyze_block, build_graph
from .fetch import FetchTarget, MissingEndpointError, estimate_seconds, fetch_range, is_cached, resolve_endpoint
from .ingest import filter_for_analysis, load_path
from .model import AccessMode, AnalysisConfig, Chain, SuccessFilter, dumps_workload
from .report import (
    DEFAULT_THRESHOLDS,
    aggregate,
    emit,
    hotspots,
    hotspots_csv,
    load_metrics,
    speedups_csv,
    speedups_json,
    write_text,
)
from .schedule import parse_workers, speedup_report
from .workload import generate, worked_example

logger = logging.getLogger("blockconflicts")


class UsageError(Exception):
    pass


CHAINS = {"eth": Chain.ETHEREUM, "sol": Chain.SOLANA, "generic": Chain.GENERIC}


def _config(args) -> AnalysisConfig:
    chain = CHAINS[args.chain]
    overrides = {}
    if args.mode:
        overrides["access_mode"] = AccessMode.EXCLUSIVE if args.mode == "exclusive" else AccessMode.READ_WRITE
    if args.include_voting:
        overrides["include_voting"] = True
    if args.no_coinbase_filter:
        overrides["coinbase_filter"] = False
    if args.successful_only:
        overrides["success_filter"] = SuccessFilter.SUCCESSFUL_ONLY
    return AnalysisConfig.for_chain(chain, **overrides)


def _fmt_for(args) -> str:
    if args.format:
        return args.format
    return "json" if str(args.out).lower().endswith(".json") else "csv"


def _analyze_one(path: str, chain: Chain, cfg: AnalysisConfig, top: int):
    try:
        wl = load_path(path, chain)
        m = analyze_block(wl, cfg)
        hot = hotspots(filter_for_analysis(wl, cfg), cfg, top) if top else []
        return path, m, hot, None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return path, None, None, f"{type(exc).__name__}: {exc}"


def _simulate_one(path: str, chain: Chain, cfg: AnalysisConfig, workers):
    try:
        wl = load_path(path, chain)
        g = build_graph(filter_for_analysis(wl, cfg), cfg)
        rows = [(wl.block_number, k, ms, sp) for k, (ms, sp) in speedup_report(g, workers).items()]
        return path, rows, None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return path, None, f"{type(exc).__name__}: {exc}"


def _run_pool(fn, paths, jobs, *extra):
    if jobs <= 1 or len(paths) <= 1:
        return [fn(p, *extra) for p in paths]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, paths, *[[e] * len(paths) for e in extra]))


def cmd_analyze(args) -> int:
    cfg = _config(args)
    results = _run_pool(_analyze_one, args.inputs, args.jobs, CHAINS[args.chain], cfg, args.hotspots)
    metrics, hot, failed = [], [], 0
    for path, m, h, err in results:
        if err:
            failed += 1
            print(f"error: {path}: {err}", file=sys.stderr)
            continue
        metrics.append(m)
        hot.append((m.block_number, h))
    emit(metrics, _fmt_for(args), args.out)
    if args.hotspots:
        write_text(hotspots_csv(hot), args.hotspots_out or _sibling(args.out, ".hotspots.csv"))
    return 1 if failed else 0


def _sibling(out, suffix: str) -> str:
    if str(out) == "-":
        return "-"
    p = Path(out)
    return str(p.with_name(p.stem + suffix))


def cmd_simulate(args) -> int:
    cfg = _config(args)
    results = _run_pool(_simulate_one, args.inputs, args.jobs, CHAINS[args.chain], cfg, args.workers)
    rows, failed = [], 0
    for path, r, err in results:
        if err:
            failed += 1
            print(f"error: {path}: {err}", file=sys.stderr)
            continue
        rows.extend(r)
    write_text(speedups_json(rows) if _fmt_for(args) == "json" else speedups_csv(rows), args.out)
    return 1 if failed else 0


def cmd_report(args) -> int:
    metrics = []
    for path in args.inputs:
        metrics.extend(load_metrics(path))
    if not metrics:
        print("error: no block metrics in input", file=sys.stderr)
        return 1
    agg = aggregate(metrics, args.label, args.thresholds, pooled=args.pooled)
    emit([agg], _fmt_for(args), args.out)
    return 0


def cmd_gen(args) -> int:
    if args.worked_example:
        wl = worked_example()
    else:
        wl = generate(
            args.seed,
            args.txs,
            args.keys,
            skew=args.skew,
            write_prob=args.write_prob,
            rw_set_size_range=args.set_size,
            block_number=args.block_number,
        )
    write_text(dumps_workload(wl), args.out)
    return 0


def cmd_fetch(args) -> int:
    chain = CHAINS[args.chain]
    url = resolve_endpoint(chain, args.rpc_url)
    try:
        target = FetchTarget(
            chain, url, args.start, args.end, Path(args.cache),
            timeout=args.timeout, max_retries=args.retries, rate=args.rate,
            concurrency=args.concurrency, force=args.force,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    todo = sum(1 for n in target.blocks if not is_cached(target, n))
    print(f"{todo} of {len(target.blocks)} blocks to fetch; "
          f"rate limit {target.rate:g} req/s, estimated minimum wall time {estimate_seconds(target, todo):.0f} s")
    summary = fetch_range(target)
    print(f"{summary.requests} requests; fetched {summary.count('fetched')}, cached {summary.count('cached')}, "
          f"skipped {summary.count('skipped')}, failed {summary.count('failed')}")
    for r in summary.failures:
        print(f"failed: {r.chain.value} {r.block}: {r.error}")
    return 1 if summary.failures else 0


def _csv_floats(text: str) -> list:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if vals != sorted(vals):
        raise argparse.ArgumentTypeError(f"thresholds must be sorted ascending: {text}")
    return vals


def _workers(text: str) -> list:
    try:
        return parse_workers(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _size_range(text: str) -> tuple:
    try:
        lo, hi = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN,MAX, got {text!r}")
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return lo, hi


def _add_analysis_flags(p):
    p.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="PATH")
    p.add_argument("--chain", choices=sorted(CHAINS), default="generic")
    p.add_argument("--mode", choices=("exclusive", "rw"))
    p.add_argument("--include-voting", action="store_true")
    p.add_argument("--no-coinbase-filter", action="store_true")
    p.add_argument("--successful-only", action="store_true")
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockconflicts", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download raw blocks into a cache directory")
    p.add_argument("chain", choices=("eth", "sol"))
    p.add_argument("--rpc-url")
    p.add_argument("--from", dest="start", type=int, required=True)
    p.add_argument("--to", dest="end", type=int, required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--rate", type=float, default=4.0)
    p.add_argument("--retries", type=int, default=5)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--concurrency", type=int, default=1)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("analyze", help="per-block conflict metrics")
    _add_analysis_flags(p)
    p.add_argument("--hotspots", type=int, default=0, metavar="N", help="also emit the top-N accessed keys per block")
    p.add_argument("--hotspots-out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="makespan and speedup per worker count")
    _add_analysis_flags(p)
    p.add_argument("--workers", type=_workers, default=[1, None], help="e.g. 1,2,4,inf")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="aggregate metrics over a period")
    p.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="PATH")
    p.add_argument("--thresholds", type=_csv_floats, default=list(DEFAULT_THRESHOLDS))
    p.add_argument("--label", default="period")
    p.add_argument("--pooled", action="store_true", help="pool counts instead of averaging per-block percentages")
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"))
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gen", help="write a synthetic canonical workload")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--txs", type=int, default=100)
    p.add_argument("--keys", type=int, default=1000)
    p.add_argument("--skew", type=float, default=1.0)
    p.add_argument("--write-prob", type=float, default=0.5)
    p.add_argument("--set-size", type=_size_range, default=(1, 4), metavar="MIN,MAX")
    p.add_argument("--block-number", type=int, default=0)
    p.add_argument("--worked-example", action="store_true", help="emit the 8-transaction golden example instead")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (MissingEndpointError, UsageError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
