"""Synthetic workloads: zipf-skewed random blocks and the 8-transaction
transfer example used as the golden fixture."""

from __future__ import annotations

import numpy as np

from .model import AccessSet, BlockWorkload, Chain, Generic, Transaction, TransactionKind


def zipf_cdf(n_keys: int, skew: float) -> np.ndarray:
    """Cumulative distribution over ranks 1..n_keys with weight rank**-skew."""
    weights = np.arange(1, n_keys + 1, dtype=float) ** -float(skew)
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


def sample_keys(rng: np.random.Generator, cdf: np.ndarray, count: int) -> list:
    """``count`` distinct ranks (0-based), drawn by inverse CDF with rejection of repeats."""
    count = min(count, len(cdf))
    chosen = []
    seen = set()
    while len(chosen) < count:
        for r in np.searchsorted(cdf, rng.random(count), side="right"):
            r = int(min(r, len(cdf) - 1))
            if r not in seen:
                seen.add(r)
                chosen.append(r)
                if len(chosen) == count:
                    break
    return chosen


def generate(
    seed: int,
    n_txs: int,
    n_keys: int,
    skew: float = 1.0,
    write_prob: float = 0.5,
    rw_set_size_range: tuple = (1, 4),
    block_number: int = 0,
) -> BlockWorkload:
    """Random generic block. Each transaction draws distinct keys from a zipf
    distribution and puts each one in its write set with probability
    ``write_prob``, otherwise in its read set."""
    lo, hi = rw_set_size_range
    if n_keys < 1:
        raise ValueError(f"n_keys must be >= 1, got {n_keys}")
    if n_txs < 0:
        raise ValueError(f"n_txs must be >= 0, got {n_txs}")
    if not 0.0 <= write_prob <= 1.0:
        raise ValueError(f"write_prob must be in [0, 1], got {write_prob}")
    if skew < 0:
        raise ValueError(f"skew must be >= 0, got {skew}")
    if lo < 0 or hi < lo:
        raise ValueError(f"bad rw_set_size_range {rw_set_size_range!r}")
    if hi > n_keys:
        raise ValueError(f"rw_set_size_range max {hi} exceeds n_keys {n_keys}")

    rng = np.random.default_rng(seed)
    cdf = zipf_cdf(n_keys, skew)
    txs = []
    for i in range(n_txs):
        size = int(rng.integers(lo, hi + 1))
        reads, writes = set(), set()
        for rank in sample_keys(rng, cdf, size):
            (writes if rng.random() < write_prob else reads).add(Generic(f"K{rank}"))
        txs.append(Transaction(f"g{i}", i, TransactionKind.GENERIC, True, AccessSet(reads, writes)))
    meta = {"generator": "zipf", "seed": str(seed), "skew": repr(float(skew)), "write_prob": repr(float(write_prob))}
    return BlockWorkload(Chain.GENERIC, block_number, txs, meta)


# (label, sender, receiver, amount) or (label, "balance", account)
WORKED_EXAMPLE_OPS = (
    ("T1", "transfer", "X1", "X2", 5),
    ("T2", "transfer", "X3", "X4", 7),
    ("T3", "transfer", "X3", "X6", 10),
    ("T4", "transfer", "X6", "X7", 5),
    ("T5", "transfer", "X8", "X9", 2),
    ("T6", "transfer", "X9", "X10", 1),
    ("T7", "balance", "X11"),
    ("T8", "balance", "X11"),
)


def op_access(op: tuple) -> AccessSet:
    if op[1] == "transfer":
        _, _, src, dst, _ = op
        return AccessSet({Generic(src)}, {Generic(src), Generic(dst)})
    return AccessSet({Generic(op[2])}, frozenset())


def ops_workload(ops, block_number: int = 0, metadata: dict | None = None) -> BlockWorkload:
    txs = [Transaction(op[0], i, TransactionKind.GENERIC, True, op_access(op)) for i, op in enumerate(ops)]
    return BlockWorkload(Chain.GENERIC, block_number, txs, metadata or {})


def worked_example() -> BlockWorkload:
    """Eight transfers and balance reads over accounts X1..X11."""
    return ops_workload(WORKED_EXAMPLE_OPS)


def random_transfer_ops(seed: int, n_txs: int, n_accounts: int, skew: float = 1.0, read_prob: float = 0.2) -> list:
    rng = np.random.default_rng(seed)
    cdf = zipf_cdf(n_accounts, skew)
    ops = []
    for i in range(n_txs):
        if rng.random() < read_prob or n_accounts < 2:
            (a,) = sample_keys(rng, cdf, 1)
            ops.append((f"t{i}", "balance", f"A{a}"))
        else:
            a, b = sample_keys(rng, cdf, 2)
            ops.append((f"t{i}", "transfer", f"A{a}", f"A{b}", int(rng.integers(1, 50))))
    return ops


def _apply(op: tuple, view: dict) -> tuple:
    """Run one op against ``view`` (account -> balance); return (writes, output)."""
    if op[1] == "transfer":
        _, _, src, dst, amt = op
        if view.get(src, 0) >= amt:
            return {src: view.get(src, 0) - amt, dst: view.get(dst, 0) + amt}, None
        return {}, "insufficient"
    return {}, view.get(op[2], 0)


def run_sequential(ops, balances: dict) -> tuple:
    """Preset-order execution; returns (final balances, per-op outputs)."""
    state = dict(balances)
    outputs = []
    for op in ops:
        writes, out = _apply(op, state)
        state.update(writes)
        outputs.append(out)
    return state, outputs


def run_rounds(ops, rounds, balances: dict, rng: np.random.Generator | None = None) -> tuple:
    """Round-parallel execution: every op in a round reads the round's start
    state; writes are committed in a random order at the end of the round."""
    state = dict(balances)
    outputs = [None] * len(ops)
    for txs in rounds:
        snapshot = dict(state)
        results = [(v, _apply(ops[v], snapshot)) for v in txs]
        order = list(range(len(results)))
        if rng is not None:
            rng.shuffle(order)
        for pos in order:
            v, (writes, out) = results[pos]
            state.update(writes)
            outputs[v] = out
    return state, outputs
