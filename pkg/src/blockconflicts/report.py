"""Per-block metric rows, period aggregates, and their CSV/JSON forms.

CSV column order for metric rows is fixed:

    block_number, n_total, n_analyzed, independent_count, independent_pct,
    longest_chain_len, longest_chain_pct, family_count, densest_family_size,
    total_conflicts, write_write_conflicts,
    then <kind>_analyzed, <kind>_independent, <kind>_independent_pct for every
    transaction kind in declaration order, then success_count, empty.

Floats are written with two decimals; rows are sorted by block number.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .conflicts import BlockMetrics
from .model import AnalysisConfig, BlockWorkload, TransactionKind, effective_accesses

DEFAULT_THRESHOLDS = (40.0, 50.0, 60.0, 70.0, 80.0)

BASE_COLUMNS = (
    "block_number",
    "n_total",
    "n_analyzed",
    "independent_count",
    "independent_pct",
    "longest_chain_len",
    "longest_chain_pct",
    "family_count",
    "densest_family_size",
    "total_conflicts",
    "write_write_conflicts",
)
KIND_COLUMNS = tuple(
    f"{k.value}_{suffix}" for k in TransactionKind for suffix in ("analyzed", "independent", "independent_pct")
)
TAIL_COLUMNS = ("success_count", "empty")
METRIC_COLUMNS = BASE_COLUMNS + KIND_COLUMNS + TAIL_COLUMNS
_FLOAT_COLUMNS = {"independent_pct", "longest_chain_pct"} | {c for c in KIND_COLUMNS if c.endswith("_pct")}

# metrics averaged per period, in output order
AGG_FIELDS = (
    "n_total",
    "n_analyzed",
    "success_count",
    "success_pct",
    "independent_count",
    "independent_pct",
    "longest_chain_len",
    "longest_chain_pct",
    "family_count",
    "densest_family_size",
    "total_conflicts",
    "write_write_conflicts",
    "write_write_share_pct",
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def metrics_row(m: BlockMetrics) -> dict:
    row = {c: getattr(m, c) for c in BASE_COLUMNS}
    for kind in TransactionKind:
        analyzed, independent = m.per_kind.get(kind, (0, 0))
        row[f"{kind.value}_analyzed"] = analyzed
        row[f"{kind.value}_independent"] = independent
        row[f"{kind.value}_independent_pct"] = 100.0 * independent / analyzed if analyzed else 0.0
    row["success_count"] = m.success_count
    row["empty"] = m.empty
    return row


def metrics_to_dict(m: BlockMetrics) -> dict:
    d = asdict(m)
    d["per_kind"] = {k.value: list(v) for k, v in m.per_kind.items()}
    return d


def metrics_from_dict(d: dict) -> BlockMetrics:
    d = dict(d)
    d["per_kind"] = {TransactionKind(k): tuple(v) for k, v in (d.get("per_kind") or {}).items()}
    return BlockMetrics(**d)


def metrics_from_row(row: dict) -> BlockMetrics:
    kw = {}
    for c in BASE_COLUMNS:
        kw[c] = float(row[c]) if c in _FLOAT_COLUMNS else int(row[c])
    per_kind = {}
    for kind in TransactionKind:
        analyzed = int(row.get(f"{kind.value}_analyzed") or 0)
        if analyzed:
            per_kind[kind] = (analyzed, int(row[f"{kind.value}_independent"]))
    return BlockMetrics(
        per_kind=per_kind,
        success_count=int(row.get("success_count") or 0),
        empty=row.get("empty") in ("1", "true", "True"),
        **kw,
    )


def metrics_csv(metrics) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for m in sorted(metrics, key=lambda m: m.block_number):
        row = metrics_row(m)
        writer.writerow([_fmt(row[c]) for c in METRIC_COLUMNS])
    return buf.getvalue()


def metrics_json(metrics) -> str:
    rows = [metrics_to_dict(m) for m in sorted(metrics, key=lambda m: m.block_number)]
    return json.dumps(rows, indent=1) + "\n"


def load_metrics(path) -> list:
    """Read metrics written by :func:`emit` (format chosen by file suffix)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return [metrics_from_dict(d) for d in json.loads(text)]
    return [metrics_from_row(r) for r in csv.DictReader(io.StringIO(text))]


@dataclass
class PeriodAggregate:
    label: str
    first_block: int
    last_block: int
    n_blocks: int
    n_empty: int = 0
    pooled: bool = False
    mean: dict = field(default_factory=dict)
    min: dict = field(default_factory=dict)
    max: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)  # tau -> blocks with independent_pct > tau
    kinds: dict = field(default_factory=dict)  # kind -> {"analyzed", "independent", "independent_pct"} means


def _block_values(m: BlockMetrics) -> dict:
    v = {f: getattr(m, f) for f in AGG_FIELDS if hasattr(m, f)}
    v["success_pct"] = 100.0 * m.success_count / m.n_analyzed if m.n_analyzed else 0.0
    v["write_write_share_pct"] = 100.0 * m.write_write_conflicts / m.total_conflicts if m.total_conflicts else 0.0
    return v


def threshold_histogram(metrics, thresholds=DEFAULT_THRESHOLDS) -> dict:
    """Number of blocks whose independent_pct is strictly above each threshold."""
    thresholds = list(thresholds)
    if thresholds != sorted(thresholds):
        raise ValueError(f"thresholds must be sorted ascending: {thresholds}")
    return {t: sum(1 for m in metrics if m.independent_pct > t) for t in thresholds}


def aggregate(metrics, label: str, thresholds=DEFAULT_THRESHOLDS, pooled: bool = False) -> PeriodAggregate:
    """Average block metrics over a period.

    Percentages are computed per block and then averaged, unless ``pooled``
    is set, in which case they are recomputed from summed counts. Empty
    blocks are counted but do not enter the averages.
    """
    metrics = list(metrics)
    if not metrics:
        raise ValueError("cannot aggregate an empty list of block metrics")
    blocks = sorted(metrics, key=lambda m: m.block_number)
    nonempty = [m for m in blocks if not m.empty] or blocks
    values = [_block_values(m) for m in nonempty]
    agg = PeriodAggregate(
        label=label,
        first_block=blocks[0].block_number,
        last_block=blocks[-1].block_number,
        n_blocks=len(blocks),
        n_empty=sum(m.empty for m in blocks),
        pooled=pooled,
        thresholds=threshold_histogram(blocks, thresholds),
    )
    for f in AGG_FIELDS:
        col = [v[f] for v in values]
        agg.mean[f] = math.fsum(col) / len(col)
        agg.min[f] = min(col)
        agg.max[f] = max(col)
    if pooled:
        analyzed = sum(m.n_analyzed for m in nonempty)
        total = sum(m.total_conflicts for m in nonempty)

        def ratio(num, den):
            return 100.0 * num / den if den else 0.0

        agg.mean["independent_pct"] = ratio(sum(m.independent_count for m in nonempty), analyzed)
        agg.mean["longest_chain_pct"] = ratio(sum(m.longest_chain_len for m in nonempty), analyzed)
        agg.mean["success_pct"] = ratio(sum(m.success_count for m in nonempty), analyzed)
        agg.mean["write_write_share_pct"] = ratio(sum(m.write_write_conflicts for m in nonempty), total)

    for kind in TransactionKind:
        rows = [m.per_kind[kind] for m in nonempty if kind in m.per_kind]
        if not rows:
            continue
        n = len(nonempty)
        an = sum(a for a, _ in rows)
        ind = sum(i for _, i in rows)
        if pooled:
            pct = 100.0 * ind / an if an else 0.0
        else:
            pct = math.fsum(100.0 * i / a for a, i in rows if a) / len(rows)
        agg.kinds[kind.value] = {"analyzed": an / n, "independent": ind / n, "independent_pct": pct}
    return agg


def aggregate_to_dict(agg: PeriodAggregate) -> dict:
    d = asdict(agg)
    d["thresholds"] = {_threshold_label(t): c for t, c in agg.thresholds.items()}
    return d


def _threshold_label(t: float) -> str:
    return f"{t:g}"


AGG_CSV_COLUMNS = ("label", "first_block", "last_block", "n_blocks", "field", "mean", "min", "max")


def aggregates_csv(aggs) -> str:
    """Long format: one row per (period, metric); threshold counts use the
    field name ``independent_pct>TAU`` with the count in ``mean``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(AGG_CSV_COLUMNS)
    for a in aggs:
        head = [a.label, a.first_block, a.last_block, a.n_blocks]
        for f in AGG_FIELDS:
            writer.writerow(head + [f, _fmt(a.mean[f]), _fmt(float(a.min[f])), _fmt(float(a.max[f]))])
        for kind, vals in a.kinds.items():
            for k, v in vals.items():
                writer.writerow(head + [f"{kind}_{k}", _fmt(v), "", ""])
        for t, c in a.thresholds.items():
            writer.writerow(head + [f"independent_pct>{_threshold_label(t)}", c, "", ""])
    return buf.getvalue()


def speedups_csv(rows) -> str:
    """``rows``: iterable of (block_number, workers, makespan, speedup); workers None = inf."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("block_number", "workers", "makespan", "speedup"))
    for b, k, makespan, speedup in sorted(rows, key=lambda r: (r[0], math.inf if r[1] is None else r[1])):
        writer.writerow((b, "inf" if k is None else k, makespan, f"{speedup:.2f}"))
    return buf.getvalue()


def speedups_json(rows) -> str:
    out = [
        {"block_number": b, "workers": "inf" if k is None else k, "makespan": ms, "speedup": sp}
        for b, k, ms, sp in sorted(rows, key=lambda r: (r[0], math.inf if r[1] is None else r[1]))
    ]
    return json.dumps(out, indent=1) + "\n"


def hotspots(wl: BlockWorkload, cfg: AnalysisConfig, top: int = 10) -> list:
    """Most accessed state keys of one block under ``cfg``.

    Returns rows ``(rank, key, reads, writes)`` ranked by total accesses,
    ties broken by key encoding.
    """
    reads, writes = Counter(), Counter()
    for acc in effective_accesses(wl, cfg):
        reads.update(k.encode() for k in acc.reads)
        writes.update(k.encode() for k in acc.writes)
    keys = sorted(set(reads) | set(writes), key=lambda k: (-(reads[k] + writes[k]), k))
    return [(rank + 1, k, reads[k], writes[k]) for rank, k in enumerate(keys[:top])]


def hotspots_csv(per_block) -> str:
    """``per_block``: iterable of (block_number, rows from :func:`hotspots`)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("block_number", "rank", "key", "reads", "writes", "accesses"))
    for b, rows in sorted(per_block, key=lambda x: x[0]):
        for rank, k, r, w in rows:
            writer.writerow((b, rank, k, r, w, r + w))
    return buf.getvalue()


def write_text(text: str, path) -> None:
    if str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def emit(items, fmt: str, path) -> None:
    """Write block metrics or period aggregates as CSV or JSON (``path="-"`` is stdout)."""
    items = list(items)
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    if items and isinstance(items[0], PeriodAggregate):
        text = aggregates_csv(items) if fmt == "csv" else json.dumps([aggregate_to_dict(a) for a in items], indent=1) + "\n"
    else:
        text = metrics_csv(items) if fmt == "csv" else metrics_json(items)
    write_text(text, path)
