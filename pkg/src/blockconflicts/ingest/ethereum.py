"""Ethereum block + prestate trace -> BlockWorkload.

The prestate tracer reports every address (and storage slot) a transaction
touches but does not separate reads from writes, so every key lands in the
write set. Reads stay empty.
"""

from __future__ import annotations

import logging

from Crypto.Hash import keccak

from ..constants import ERC20_TRANSFER_SELECTORS
from ..model import (
    AccessSet,
    BlockWorkload,
    Chain,
    ContractAccount,
    ContractStorage,
    EncodingError,
    EoaAccount,
    Transaction,
    TransactionKind,
)

logger = logging.getLogger(__name__)


class EthereumParseError(ValueError):
    pass


def _unwrap(doc):
    if isinstance(doc, dict) and "jsonrpc" in doc:
        if doc.get("error"):
            raise EthereumParseError(f"RPC error payload: {doc['error']}")
        return doc.get("result")
    return doc


def _as_int(value) -> int:
    if value is None:
        return 0
    if isinstance(value, int):
        return value
    value = str(value)
    return int(value, 16) if value.startswith(("0x", "0X")) else int(value)


def _has_code(entry: dict) -> bool:
    code = entry.get("code")
    return bool(code) and code not in ("0x", "0X")


def classify_ethereum_kind(tx: dict) -> TransactionKind:
    if tx.get("to") is None:
        return TransactionKind.CONTRACT_CALL
    data = (tx.get("input") or tx.get("data") or "0x").lower()
    if data in ("", "0x"):
        return TransactionKind.ETH_TRANSFER
    if data[:10] in ERC20_TRANSFER_SELECTORS:
        return TransactionKind.ERC20_TRANSFER
    return TransactionKind.CONTRACT_CALL


def _rlp_bytes(b: bytes) -> bytes:
    if len(b) == 1 and b[0] < 0x80:
        return b
    return bytes([0x80 + len(b)]) + b


def create_address(sender: str, nonce: int) -> str:
    """Address of a contract deployed by ``sender`` at ``nonce``."""
    payload = _rlp_bytes(bytes.fromhex(sender[2:] if sender.startswith("0x") else sender))
    payload += _rlp_bytes(nonce.to_bytes((nonce.bit_length() + 7) // 8, "big"))
    h = keccak.new(digest_bits=256)
    h.update(bytes([0xC0 + len(payload)]) + payload)
    return "0x" + h.hexdigest()[-40:]


def _created_address(tx: dict) -> str | None:
    for key in ("creates", "contractAddress"):
        if tx.get(key):
            return tx[key].lower()
    if tx.get("from") is not None and tx.get("nonce") is not None:
        return create_address(tx["from"].lower(), _as_int(tx["nonce"]))
    return None


def _trace_results(trace) -> list:
    trace = _unwrap(trace)
    if trace is None:
        return []
    if not isinstance(trace, list):
        raise EthereumParseError("prestate trace must be a list of per-transaction results")
    return trace


def transaction_access(tx: dict, prestate: dict) -> AccessSet:
    to = (tx.get("to") or "").lower() or None
    value = _as_int(tx.get("value"))
    created = _created_address(tx) if to is None else None
    writes = set()
    for addr, entry in prestate.items():
        addr_l = addr.lower()
        entry = entry or {}
        contract = _has_code(entry) or addr_l == created
        if contract:
            for slot in entry.get("storage") or {}:
                writes.add(ContractStorage(addr_l, slot))
            if addr_l == created or (addr_l == to and value > 0):
                writes.add(ContractAccount(addr_l))
        else:
            writes.add(EoaAccount(addr_l))
    return AccessSet(frozenset(), frozenset(writes))


def parse_ethereum(block, trace) -> BlockWorkload:
    """Build a workload from ``eth_getBlockByNumber`` (full txs) and a
    ``debug_traceBlockByNumber`` prestate trace."""
    block = _unwrap(block)
    if not isinstance(block, dict):
        raise EthereumParseError("block JSON is not an object")
    raw_txs = block.get("transactions") or []
    results = _trace_results(trace)
    if len(results) != len(raw_txs):
        raise EthereumParseError(
            f"trace has {len(results)} entries but block has {len(raw_txs)} transactions"
        )
    txs = []
    for i, (rtx, entry) in enumerate(zip(raw_txs, results)):
        if not isinstance(rtx, dict):
            raise EthereumParseError(f"tx {i}: block must contain full transaction objects")
        tx_hash = rtx.get("hash", f"tx{i}")
        if isinstance(entry, dict) and "result" in entry or isinstance(entry, dict) and "error" in entry:
            if entry.get("error"):
                raise EthereumParseError(f"tx {i}: trace error {entry['error']}")
            if entry.get("txHash") and rtx.get("hash") and entry["txHash"].lower() != rtx["hash"].lower():
                raise EthereumParseError(f"tx {i}: trace txHash {entry['txHash']} does not match {rtx['hash']}")
            prestate = entry.get("result") or {}
        else:
            prestate = entry or {}
        try:
            access = transaction_access(rtx, prestate)
        except EncodingError as exc:
            raise EthereumParseError(f"tx {i} ({tx_hash}): {exc}") from exc
        txs.append(Transaction(tx_hash, i, classify_ethereum_kind(rtx), True, access))

    metadata = {}
    if block.get("miner"):
        metadata["coinbase"] = block["miner"].lower()
    if block.get("timestamp") is not None:
        metadata["timestamp"] = str(_as_int(block["timestamp"]))
    if block.get("hash"):
        metadata["hash"] = block["hash"]
    return BlockWorkload(Chain.ETHEREUM, _as_int(block.get("number")), txs, metadata)
