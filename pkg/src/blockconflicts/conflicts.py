"""Conflict graph construction and the six per-block parallelism metrics."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field

from .ingest import filter_for_analysis
from .model import AccessSet, AnalysisConfig, BlockWorkload, TransactionKind, effective_accesses


class AnalysisError(ValueError):
    pass


class ConflictType(str, enum.Enum):
    READ_WRITE = "rw"
    WRITE_READ = "wr"
    WRITE_WRITE = "ww"


_TYPE_ORDER = {ConflictType.WRITE_WRITE: 0, ConflictType.WRITE_READ: 1, ConflictType.READ_WRITE: 2}


def _witness(in_ra: bool, in_wa: bool, in_rb: bool, in_wb: bool) -> list:
    # A state the earlier tx both reads and writes counts through its write:
    # the write-write witness already orders the pair.
    out = []
    if in_wa and in_wb:
        out.append(ConflictType.WRITE_WRITE)
    if in_wa and in_rb:
        out.append(ConflictType.WRITE_READ)
    if in_ra and in_wb and not in_wa:
        out.append(ConflictType.READ_WRITE)
    return out


def conflict(a: AccessSet, b: AccessSet) -> list:
    """All ``(state, type)`` witnesses of ``a`` (earlier) conflicting with ``b``.

    An empty list means the two do not conflict.
    """
    shared = (a.writes & b.accessed) | (a.reads & b.writes)
    out = []
    for s in sorted(shared, key=lambda k: k.encode()):
        for t in _witness(s in a.reads, s in a.writes, s in b.reads, s in b.writes):
            out.append((s, t))
    return out


@dataclass(frozen=True)
class ConflictEdge:
    i: int
    j: int
    labels: tuple

    @property
    def write_write(self) -> int:
        return sum(1 for _, t in self.labels if t is ConflictType.WRITE_WRITE)


@dataclass
class ConflictGraph:
    """Conflict graph of one block. Edges always point from the lower preset
    index to the higher one, so the directed view is a DAG."""

    n: int
    edges: dict = field(default_factory=dict)  # (i, j) -> ConflictEdge
    kinds: tuple = ()
    success: tuple = ()

    def __post_init__(self):
        self.preds = [[] for _ in range(self.n)]
        self.succs = [[] for _ in range(self.n)]
        for i, j in sorted(self.edges):
            self.succs[i].append(j)
            self.preds[j].append(i)

    def neighbors(self, v: int) -> list:
        return self.preds[v] + self.succs[v]

    def degree(self, v: int) -> int:
        return len(self.preds[v]) + len(self.succs[v])


def build_graph_from_accesses(accesses: list, kinds=(), success=()) -> ConflictGraph:
    n = len(accesses)
    by_key = defaultdict(list)
    for idx, acc in enumerate(accesses):
        for s in acc.accessed:
            by_key[s].append(idx)

    labels = defaultdict(list)
    for s, users in by_key.items():
        writers = [u for u in users if s in accesses[u].writes]
        if not writers:
            continue
        pairs = set()
        for w in writers:
            for u in users:
                if u != w:
                    pairs.add((w, u) if w < u else (u, w))
        for i, j in pairs:
            a, b = accesses[i], accesses[j]
            for t in _witness(s in a.reads, s in a.writes, s in b.reads, s in b.writes):
                labels[(i, j)].append((s, t))

    edges = {}
    for (i, j), lab in labels.items():
        lab.sort(key=lambda st: (st[0].encode(), _TYPE_ORDER[st[1]]))
        edges[(i, j)] = ConflictEdge(i, j, tuple(lab))
    return ConflictGraph(n, edges, tuple(kinds), tuple(success))


def build_graph(wl: BlockWorkload, cfg: AnalysisConfig) -> ConflictGraph:
    """Conflict graph over ``wl`` as given; filtering is the caller's job."""
    return build_graph_from_accesses(
        effective_accesses(wl, cfg),
        kinds=[tx.kind for tx in wl.transactions],
        success=[tx.success for tx in wl.transactions],
    )


def independent_transactions(g: ConflictGraph) -> tuple:
    """``(count, pct, per_kind)`` where ``per_kind`` maps kind -> (analyzed, independent)."""
    independent = [v for v in range(g.n) if g.degree(v) == 0]
    pct = 100.0 * len(independent) / g.n if g.n else 0.0
    per_kind = {}
    if g.kinds:
        for v, kind in enumerate(g.kinds):
            analyzed, ind = per_kind.get(kind, (0, 0))
            per_kind[kind] = (analyzed + 1, ind + (g.degree(v) == 0))
    return len(independent), pct, per_kind


def chain_lengths(g: ConflictGraph) -> list:
    """Longest conflict chain ending at each transaction, in vertices."""
    length = [1] * g.n
    for j in range(g.n):
        for i in g.preds[j]:
            if length[i] + 1 > length[j]:
                length[j] = length[i] + 1
    return length


def longest_conflict_chain(g: ConflictGraph) -> tuple:
    """``(length, path)``; ties resolve to the lowest indices."""
    if g.n == 0:
        return 0, []
    length = chain_lengths(g)
    best = max(length)
    v = length.index(best)
    path = [v]
    while length[v] > 1:
        v = min(i for i in g.preds[v] if length[i] == length[v] - 1)
        path.append(v)
    return best, path[::-1]


def conflict_families(g: ConflictGraph) -> list:
    """Connected components of the undirected view, singletons included,
    sorted by size descending then smallest member."""
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in g.edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    groups = defaultdict(set)
    for v in range(g.n):
        groups[find(v)].add(v)
    return sorted(groups.values(), key=lambda f: (-len(f), min(f)))


def densest_family(families: list) -> tuple:
    if not families:
        raise ValueError("densest_family of an empty family list")
    best = min(families, key=lambda f: (-len(f), min(f)))
    return len(best), best


def count_conflicts(g: ConflictGraph) -> tuple:
    """``(total, write_write)``: every (pair, state, type) witness counts once."""
    total = sum(len(e.labels) for e in g.edges.values())
    ww = sum(e.write_write for e in g.edges.values())
    return total, ww


@dataclass
class BlockMetrics:
    block_number: int
    n_total: int = 0
    n_analyzed: int = 0
    independent_count: int = 0
    independent_pct: float = 0.0
    longest_chain_len: int = 0
    longest_chain_pct: float = 0.0
    family_count: int = 0
    densest_family_size: int = 0
    total_conflicts: int = 0
    write_write_conflicts: int = 0
    per_kind: dict = field(default_factory=dict)  # TransactionKind -> (analyzed, independent)
    success_count: int = 0
    empty: bool = False


def metrics_from_graph(g: ConflictGraph, block_number: int, n_total: int | None = None) -> BlockMetrics:
    if g.n == 0:
        return BlockMetrics(block_number, n_total=n_total or 0, empty=True)
    ind, ind_pct, per_kind = independent_transactions(g)
    chain_len, _ = longest_conflict_chain(g)
    families = conflict_families(g)
    dense, _ = densest_family(families)
    total, ww = count_conflicts(g)
    return BlockMetrics(
        block_number=block_number,
        n_total=g.n if n_total is None else n_total,
        n_analyzed=g.n,
        independent_count=ind,
        independent_pct=ind_pct,
        longest_chain_len=chain_len,
        longest_chain_pct=100.0 * chain_len / g.n,
        family_count=len(families),
        densest_family_size=dense,
        total_conflicts=total,
        write_write_conflicts=ww,
        per_kind=dict(sorted(per_kind.items(), key=lambda kv: list(TransactionKind).index(kv[0]))),
        success_count=sum(g.success) if g.success else g.n,
    )


def analyze_block(wl: BlockWorkload, cfg: AnalysisConfig) -> BlockMetrics:
    """Filter, build the conflict graph and compute every metric for one block."""
    try:
        filtered = filter_for_analysis(wl, cfg)
        g = build_graph(filtered, cfg)
        return metrics_from_graph(g, wl.block_number, n_total=len(wl))
    except (ValueError, KeyError) as exc:
        raise AnalysisError(f"block {wl.block_number}: {exc}") from exc
