"""Turn raw chain data and canonical files into :class:`BlockWorkload`."""

from __future__ import annotations

import json
import re
from dataclasses import replace
from pathlib import Path

from ..model import (
    AnalysisConfig,
    BlockWorkload,
    Chain,
    SuccessFilter,
    TransactionKind,
    is_canonical_workload,
    workload_from_dict,
)
from .ethereum import EthereumParseError, classify_ethereum_kind, parse_ethereum
from .solana import SolanaParseError, parse_solana

__all__ = [
    "EthereumParseError",
    "SolanaParseError",
    "classify_ethereum_kind",
    "filter_for_analysis",
    "load_path",
    "parse_ethereum",
    "parse_solana",
]


def filter_for_analysis(wl: BlockWorkload, cfg: AnalysisConfig) -> BlockWorkload:
    """Drop votes and/or failed transactions, keeping preset order.

    Surviving transactions are renumbered ``0..m-1``; their original indices
    go to ``metadata["original_indices"]`` and the pre-filter size to
    ``metadata["n_total"]``.
    """
    keep = [
        tx
        for tx in wl.transactions
        if (cfg.include_voting or tx.kind is not TransactionKind.SOLANA_VOTE)
        and (cfg.success_filter is SuccessFilter.ALL or tx.success)
    ]
    if len(keep) == len(wl.transactions):
        return wl
    metadata = dict(wl.metadata)
    if "original_indices" in metadata:
        prior = [int(x) for x in metadata["original_indices"].split(",") if x]
        originals = [prior[tx.index] for tx in keep]
    else:
        originals = [tx.index for tx in keep]
    metadata["original_indices"] = ",".join(map(str, originals))
    metadata.setdefault("n_total", str(len(wl.transactions)))
    txs = [replace(tx, index=i) for i, tx in enumerate(keep)]
    return BlockWorkload(wl.chain, wl.block_number, txs, metadata)


_ETH_BLOCK = re.compile(r"^eth-(\d+)\.block\.json$")
_SOL_BLOCK = re.compile(r"^sol-(\d+)\.block\.json$")


def load_path(path, chain: Chain | str | None = None) -> BlockWorkload:
    """Load one block from a canonical workload file or a cached raw RPC file.

    Raw Ethereum blocks need their ``.trace.json`` sibling next to the
    ``.block.json`` file.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if is_canonical_workload(data):
        return workload_from_dict(data)
    chain = Chain(chain) if chain is not None else None
    name = path.name
    if chain is Chain.ETHEREUM or (chain is None and _ETH_BLOCK.match(name)):
        if name.endswith(".trace.json"):
            raise EthereumParseError(f"{path}: pass the .block.json file, not the trace")
        trace_path = path.with_name(name.replace(".block.json", ".trace.json"))
        if trace_path == path or not trace_path.exists():
            raise EthereumParseError(f"{path}: missing prestate trace file {trace_path.name}")
        with open(trace_path, encoding="utf-8") as fh:
            trace = json.load(fh)
        return parse_ethereum(data, trace)
    if chain is Chain.SOLANA or (chain is None and _SOL_BLOCK.match(name)):
        m = _SOL_BLOCK.match(name)
        return parse_solana(data, int(m.group(1)) if m else None)
    raise ValueError(f"{path}: not a canonical workload and chain of raw data unknown")
