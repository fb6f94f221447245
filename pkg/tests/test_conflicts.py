import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockconflicts.conflicts import (
    ConflictType,
    analyze_block,
    build_graph,
    conflict,
    conflict_families,
    count_conflicts,
    densest_family,
    independent_transactions,
    longest_conflict_chain,
)
from blockconflicts.model import (
    AccessMode,
    AccessSet,
    AnalysisConfig,
    BlockWorkload,
    Chain,
    EoaAccount,
    Generic,
    Transaction,
    TransactionKind,
)
from blockconflicts.workload import generate, worked_example
from oracles import bfs_components, longest_path_by_subsets, naive_access, naive_edges, reference_metrics

RW = AnalysisConfig.for_chain(Chain.GENERIC)
X = {i: Generic(f"X{i}") for i in range(1, 12)}
WW, WR, RWT = ConflictType.WRITE_WRITE, ConflictType.WRITE_READ, ConflictType.READ_WRITE


def wl_of(sets, chain=Chain.GENERIC, metadata=None, kinds=None):
    txs = [
        Transaction(f"t{i}", i, kinds[i] if kinds else TransactionKind.GENERIC, True, AccessSet(set(r), set(w)))
        for i, (r, w) in enumerate(sets)
    ]
    return BlockWorkload(chain, 0, txs, metadata or {})


keys = st.sampled_from([Generic(f"k{i}") for i in range(6)])
access_sets = st.builds(AccessSet, st.frozensets(keys, max_size=3), st.frozensets(keys, max_size=3))


def test_conflict_write_read_and_write_write():
    t2 = AccessSet({X[3]}, {X[3], X[4]})
    t3 = AccessSet({X[3]}, {X[3], X[6]})
    assert conflict(t2, t3) == [(X[3], WW), (X[3], WR)]


def test_read_read_no_conflict():
    assert conflict(AccessSet({X[11]}), AccessSet({X[11]})) == []


def test_empty_sets_no_conflict():
    assert conflict(AccessSet(), AccessSet()) == []


def test_read_then_write_is_read_write():
    assert conflict(AccessSet({X[1]}), AccessSet((), {X[1]})) == [(X[1], RWT)]


@given(access_sets, access_sets)
def test_conflict_symmetry(a, b):
    # Same states and write-write witnesses either way round. Cross labels swap
    # exactly unless one side both reads and writes the state, in which case
    # the read-write witness is folded into write-write for the earlier tx.
    ab, ba = conflict(a, b), conflict(b, a)
    assert {s for s, _ in ab} == {s for s, _ in ba}
    assert {s for s, t in ab if t is WW} == {s for s, t in ba if t is WW}
    swap = {WR: RWT, RWT: WR, WW: WW}
    for s in {s for s, _ in ab}:
        overlap = (s in a.reads and s in a.writes) or (s in b.reads and s in b.writes)
        if not overlap:
            assert {t for x, t in ab if x == s} == {swap[t] for x, t in ba if x == s}


@given(st.frozensets(keys, max_size=4), st.frozensets(keys, max_size=4))
def test_read_only_sets_never_conflict(ra, rb):
    assert conflict(AccessSet(ra), AccessSet(rb)) == []


@given(st.lists(access_sets, min_size=1, max_size=6), st.integers(0, 5), keys)
def test_adding_a_write_never_removes_an_edge(sets, which, key):
    which %= len(sets)
    before = build_graph(wl_of([(s.reads, s.writes) for s in sets]), RW)
    bumped = list(sets)
    bumped[which] = AccessSet(bumped[which].reads, bumped[which].writes | {key})
    after = build_graph(wl_of([(s.reads, s.writes) for s in bumped]), RW)
    assert set(before.edges) <= set(after.edges)


def test_worked_example_graph():
    g = build_graph(worked_example(), RW)
    assert sorted(g.edges) == [(1, 2), (2, 3), (4, 5)]
    assert g.edges[(1, 2)].labels == ((X[3], WW), (X[3], WR))


def test_single_tx_block_has_no_edges():
    assert build_graph(wl_of([({X[1]}, {X[1]})]), RW).edges == {}


@pytest.mark.parametrize("n", [2, 5, 12])
def test_shared_write_block_is_complete(n):
    g = build_graph(wl_of([((), {X[1]})] * n), RW)
    assert len(g.edges) == n * (n - 1) // 2


def test_worked_example_independent():
    count, pct, per_kind = independent_transactions(build_graph(worked_example(), RW))
    assert (count, pct) == (3, 37.5)
    assert per_kind == {TransactionKind.GENERIC: (8, 3)}


def test_disjoint_block_fully_independent():
    g = build_graph(wl_of([((), {X[i]}) for i in range(1, 6)]), RW)
    assert independent_transactions(g)[:2] == (5, 100.0)


def test_per_kind_split():
    kinds = [TransactionKind.ETH_TRANSFER, TransactionKind.CONTRACT_CALL, TransactionKind.CONTRACT_CALL]
    g = build_graph(wl_of([((), {X[1]}), ((), {X[2]}), ((), {X[2]})], kinds=kinds), RW)
    assert independent_transactions(g)[2] == {TransactionKind.ETH_TRANSFER: (1, 1), TransactionKind.CONTRACT_CALL: (2, 0)}


def test_worked_example_chain():
    assert longest_conflict_chain(build_graph(worked_example(), RW)) == (3, [1, 2, 3])


def test_edgeless_chain_length_one():
    g = build_graph(wl_of([((), {X[i]}) for i in range(1, 6)]), RW)
    assert longest_conflict_chain(g)[0] == 1


def test_empty_graph_chain():
    assert longest_conflict_chain(build_graph(wl_of([]), RW)) == (0, [])


def test_worked_example_families():
    fams = conflict_families(build_graph(worked_example(), RW))
    assert fams == [{1, 2, 3}, {4, 5}, {0}, {6}, {7}]
    assert densest_family(fams) == (3, {1, 2, 3})


def test_edgeless_families_are_singletons():
    fams = conflict_families(build_graph(wl_of([((), {X[i]}) for i in range(1, 5)]), RW))
    assert fams == [{0}, {1}, {2}, {3}]
    assert densest_family(fams) == (1, {0})


def test_two_groups_sizes():
    sets = [((), {X[1]})] * 4 + [((), {X[2]})] * 3
    g = build_graph(wl_of(sets), RW)
    fams = conflict_families(g)
    assert [len(f) for f in fams] == [4, 3]
    assert {frozenset(f) for f in fams} == set(bfs_components(g.n, g.edges))


def test_densest_family_empty():
    with pytest.raises(ValueError):
        densest_family([])


def test_count_conflicts():
    assert count_conflicts(build_graph(worked_example(), RW)) == (6, 3)
    assert count_conflicts(build_graph(wl_of([((), {X[1]}), ((), {X[2]})]), RW)) == (0, 0)
    assert count_conflicts(build_graph(wl_of([((), {X[1], X[2]})] * 2), RW)) == (2, 2)


def test_analyze_worked_example():
    m = analyze_block(worked_example(), RW)
    assert (m.independent_count, m.independent_pct) == (3, 37.5)
    assert (m.longest_chain_len, m.family_count, m.densest_family_size) == (3, 5, 3)
    assert (m.total_conflicts, m.write_write_conflicts) == (6, 3)
    assert m.n_total == m.n_analyzed == 8


def test_analyze_empty_block():
    m = analyze_block(wl_of([]), RW)
    assert m.empty and m.n_analyzed == 0 and m.independent_pct == 0 and m.family_count == 0


def test_solana_metrics_count_only_nonvoting():
    vote, nv = TransactionKind.SOLANA_VOTE, TransactionKind.SOLANA_NONVOTE
    txs = [Transaction(f"s{i}", i, k, ok, AccessSet((), {Generic("hot")}))
           for i, (k, ok) in enumerate([(vote, True), (nv, True), (vote, True), (nv, False), (nv, True)])]
    wl = BlockWorkload(Chain.GENERIC, 3, txs)
    m = analyze_block(wl, AnalysisConfig.for_chain(Chain.SOLANA))
    assert (m.n_total, m.n_analyzed, m.success_count) == (5, 3, 2)


def _random_sets(rng, n, n_keys=6):
    sets = []
    for _ in range(n):
        ks = rng.choice(n_keys, size=rng.integers(0, 4), replace=False)
        r, w = set(), set()
        for k in ks:
            # include read+write overlaps too
            roll = rng.random()
            if roll < 0.4:
                r.add(Generic(f"k{k}"))
            elif roll < 0.8:
                w.add(Generic(f"k{k}"))
            else:
                r.add(Generic(f"k{k}"))
                w.add(Generic(f"k{k}"))
        sets.append((r, w))
    return sets


def test_graph_matches_pairwise_construction():
    rng = np.random.default_rng(11)
    for _ in range(200):
        wl = wl_of(_random_sets(rng, int(rng.integers(0, 12))))
        g = build_graph(wl, RW)
        ref = naive_edges(naive_access(wl.transactions, wl.metadata, RW))
        assert set(g.edges) == set(ref)
        for e, labels in ref.items():
            assert [(s.encode(), t.value) for s, t in g.edges[e].labels] == labels


def test_chain_matches_subset_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(100):
        wl = wl_of(_random_sets(rng, int(rng.integers(1, 10))))
        g = build_graph(wl, RW)
        length, path = longest_conflict_chain(g)
        assert length == longest_path_by_subsets(g.n, g.edges)
        assert len(path) == length
        assert all((a, b) in g.edges for a, b in zip(path, path[1:]))


@settings(max_examples=150, deadline=None)
@given(st.lists(access_sets, max_size=12))
def test_block_invariants(sets):
    wl = wl_of([(s.reads, s.writes) for s in sets])
    g = build_graph(wl, RW)
    m = analyze_block(wl, RW)
    fams = conflict_families(g)
    assert sum(len(f) for f in fams) == m.n_analyzed
    assert set().union(*fams) == set(range(g.n)) if fams else g.n == 0
    touched = {v for e in g.edges for v in e}
    assert m.independent_count == g.n - len(touched)
    assert m.longest_chain_len <= m.densest_family_size
    assert m.write_write_conflicts <= m.total_conflicts
    assert m.independent_count <= m.n_analyzed
    if m.n_analyzed:
        assert m.family_count >= 1


def test_dual_implementation_on_zipf_blocks():
    for b in range(100):
        wl = generate(seed=1000 + b, n_txs=40, n_keys=60, skew=1.0, write_prob=0.5, rw_set_size_range=(1, 5), block_number=b)
        for cfg in (RW, AnalysisConfig.for_chain(Chain.GENERIC, access_mode=AccessMode.EXCLUSIVE)):
            m = analyze_block(wl, cfg)
            ref = reference_metrics(wl, cfg)
            for k, v in ref.items():
                assert getattr(m, k) == pytest.approx(v), (b, k)


def test_coinbase_invariance_and_collapse():
    cb = "0x" + "cb" * 20
    rng = np.random.default_rng(3)
    base = _random_sets(rng, 15, n_keys=25)
    eth = AnalysisConfig.for_chain(Chain.ETHEREUM, access_mode=AccessMode.READ_WRITE)
    plain = analyze_block(wl_of(base, metadata={"coinbase": cb}), eth)
    injected = wl_of([(r, set(w) | {EoaAccount(cb)}) for r, w in base], metadata={"coinbase": cb})
    assert analyze_block(injected, eth) == plain
    collapsed = analyze_block(injected, AnalysisConfig.for_chain(Chain.ETHEREUM, coinbase_filter=False))
    assert collapsed.independent_count == 0 and collapsed.family_count == 1


def test_coinbase_only_write_is_conflict_free():
    cb = "0x" + "cb" * 20
    sets = [((), {EoaAccount(cb)}), ((), {EoaAccount(cb), X[1]}), ((), {X[1]})]
    m = analyze_block(wl_of(sets, metadata={"coinbase": cb}), AnalysisConfig.for_chain(Chain.ETHEREUM))
    g_ind = independent_transactions(
        build_graph(wl_of(sets, metadata={"coinbase": cb}), AnalysisConfig.for_chain(Chain.ETHEREUM))
    )
    assert m.independent_count == 1 and g_ind[0] == 1


def test_exclusive_overcounts_on_overlapping_read_write_sets():
    # The worked example reads and writes the sender in one tx; exclusive mode
    # merges those witnesses and also makes T7/T8 conflict.
    rw = analyze_block(worked_example(), RW)
    ex = analyze_block(worked_example(), AnalysisConfig.for_chain(Chain.GENERIC, access_mode=AccessMode.EXCLUSIVE))
    assert ex.independent_pct < rw.independent_pct
    assert (rw.total_conflicts, ex.total_conflicts) == (6, 4)
