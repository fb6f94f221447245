"""Conflict-respecting parallel schedules with unit transaction cost."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .conflicts import ConflictGraph, chain_lengths

UNBOUNDED = None


@dataclass(frozen=True)
class Schedule:
    rounds: tuple  # tuple of tuples of preset indices
    workers: int | None  # None = unbounded
    makespan: int


def level_schedule(g: ConflictGraph) -> Schedule:
    """Place every transaction in round L(t), the longest conflict chain ending at t."""
    if g.n == 0:
        return Schedule((), UNBOUNDED, 0)
    length = chain_lengths(g)
    rounds = [[] for _ in range(max(length))]
    for v, lv in enumerate(length):
        rounds[lv - 1].append(v)
    return Schedule(tuple(tuple(r) for r in rounds), UNBOUNDED, len(rounds))


def bounded_schedule(g: ConflictGraph, k: int | None) -> Schedule:
    """Greedy list scheduling: each step runs up to ``k`` ready transactions,
    lowest preset index first. ``k=None`` means unbounded workers."""
    if k is not None and (not isinstance(k, int) or k < 1):
        raise ValueError(f"worker count must be a positive integer or unbounded, got {k!r}")
    pending = [len(p) for p in g.preds]
    ready = [v for v in range(g.n) if pending[v] == 0]
    heapq.heapify(ready)
    rounds = []
    while ready:
        take = len(ready) if k is None else min(k, len(ready))
        step = [heapq.heappop(ready) for _ in range(take)]
        rounds.append(tuple(step))
        for v in step:
            for w in g.succs[v]:
                pending[w] -= 1
                if pending[w] == 0:
                    heapq.heappush(ready, w)
    return Schedule(tuple(rounds), k, len(rounds))


def parse_workers(text: str) -> list:
    """``"1,2,inf"`` -> ``[1, 2, None]``."""
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if part in ("inf", "unbounded", "∞"):
            out.append(UNBOUNDED)
            continue
        k = int(part)
        if k < 1:
            raise ValueError(f"worker count must be >= 1, got {k}")
        out.append(k)
    return out


def speedup_report(g: ConflictGraph, k_list) -> dict:
    """Map each worker count (``None`` = unbounded, always included) to
    ``(makespan, speedup)`` with speedup = n / makespan."""
    ks = list(dict.fromkeys(list(k_list) + [UNBOUNDED]))
    out = {}
    for k in ks:
        makespan = bounded_schedule(g, k).makespan
        out[k] = (makespan, g.n / makespan if makespan else 0.0)
    return out


def validate_schedule(g: ConflictGraph, sched: Schedule) -> None:
    """Raise ``AssertionError`` if the schedule breaks a conflict or misses a tx."""
    where = {}
    for r, txs in enumerate(sched.rounds):
        if sched.workers is not None and len(txs) > sched.workers:
            raise AssertionError(f"round {r} runs {len(txs)} txs on {sched.workers} workers")
        for v in txs:
            if v in where:
                raise AssertionError(f"tx {v} scheduled twice")
            where[v] = r
    if sorted(where) != list(range(g.n)):
        raise AssertionError("schedule does not cover every transaction exactly once")
    for i, j in g.edges:
        if where[i] >= where[j]:
            raise AssertionError(f"conflicting txs {i}->{j} in rounds {where[i]}, {where[j]}")
