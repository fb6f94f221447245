import numpy as np
import pytest

from blockconflicts.conflicts import analyze_block
from blockconflicts.model import AnalysisConfig, Chain, dumps_workload
from blockconflicts.workload import (
    generate,
    random_transfer_ops,
    run_rounds,
    run_sequential,
    sample_keys,
    worked_example,
    zipf_cdf,
)

RW = AnalysisConfig.for_chain(Chain.GENERIC)


def test_generation_is_deterministic():
    a = dumps_workload(generate(7, 50, 100, skew=1.2))
    b = dumps_workload(generate(7, 50, 100, skew=1.2))
    assert a == b
    assert a != dumps_workload(generate(8, 50, 100, skew=1.2))


def test_shape_and_invariants():
    wl = generate(1, 200, 50, skew=1.0, rw_set_size_range=(2, 5), block_number=9)
    assert wl.block_number == 9 and len(wl.transactions) == 200
    for i, tx in enumerate(wl.transactions):
        assert tx.index == i
        assert 2 <= len(tx.access.accessed) <= 5
        assert not tx.access.reads & tx.access.writes


def test_uniform_sparse_is_mostly_independent():
    wl = generate(0, 100, 1_000_000, skew=0.0, write_prob=1.0, rw_set_size_range=(1, 1))
    assert analyze_block(wl, RW).independent_pct >= 99.0


def test_single_hot_key_is_one_chain():
    wl = generate(0, 40, 1, skew=1.0, write_prob=1.0, rw_set_size_range=(1, 1))
    m = analyze_block(wl, RW)
    assert m.family_count == 1 and m.longest_chain_len == 40


def test_zipf_cdf():
    cdf = zipf_cdf(4, 1.0)
    w = np.array([1, 1 / 2, 1 / 3, 1 / 4])
    assert np.allclose(cdf, np.cumsum(w) / w.sum())
    assert np.allclose(np.diff(zipf_cdf(5, 0.0)), 0.2)


def test_sample_keys_distinct():
    rng = np.random.default_rng(0)
    cdf = zipf_cdf(5, 2.0)
    for _ in range(100):
        ks = sample_keys(rng, cdf, 5)
        assert sorted(ks) == list(range(5))


def test_skew_raises_rank_one_frequency():
    rng = np.random.default_rng(0)
    flat = sum(k == 0 for _ in range(2000) for k in sample_keys(rng, zipf_cdf(100, 0.0), 1))
    steep = sum(k == 0 for _ in range(2000) for k in sample_keys(rng, zipf_cdf(100, 1.5), 1))
    assert steep > 5 * flat


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_txs=-1, n_keys=10),
        dict(n_txs=5, n_keys=0),
        dict(n_txs=5, n_keys=10, skew=-0.5),
        dict(n_txs=5, n_keys=10, write_prob=1.5),
        dict(n_txs=5, n_keys=10, rw_set_size_range=(3, 2)),
        dict(n_txs=5, n_keys=2, rw_set_size_range=(1, 3)),
    ],
)
def test_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        generate(0, **kwargs)


def test_worked_example_shape():
    wl = worked_example()
    assert [t.id for t in wl.transactions] == [f"T{i}" for i in range(1, 9)]
    assert not wl.transactions[6].access.writes


def test_sequential_semantics():
    ops = [("a", "transfer", "A", "B", 5), ("b", "balance", "B"), ("c", "transfer", "B", "C", 100)]
    state, out = run_sequential(ops, {"A": 10})
    assert state == {"A": 5, "B": 5} and out == [None, 5, "insufficient"]


def test_round_execution_reads_round_snapshot():
    ops = [("a", "transfer", "A", "B", 5), ("b", "balance", "B")]
    assert run_rounds(ops, [(0, 1)], {"A": 10})[1] == [None, 0]
    assert run_rounds(ops, [(0,), (1,)], {"A": 10})[1] == [None, 5]


def test_transfer_ops_deterministic():
    assert random_transfer_ops(3, 20, 10) == random_transfer_ops(3, 20, 10)
