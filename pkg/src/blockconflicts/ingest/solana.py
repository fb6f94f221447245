"""Solana ``getBlock`` JSON -> BlockWorkload.

Account order in a message is fixed by the header: signed writable, signed
readonly, unsigned writable, unsigned readonly. Address-lookup-table accounts
(``meta.loadedAddresses``) follow, writable before readonly.
"""

from __future__ import annotations

import logging

from ..constants import VOTE_PROGRAM_ID
from ..model import (
    AccessSet,
    BlockWorkload,
    Chain,
    EncodingError,
    SolanaAccount,
    Transaction,
    TransactionKind,
)

logger = logging.getLogger(__name__)


class SolanaParseError(ValueError):
    pass


def _unwrap(doc):
    if isinstance(doc, dict) and "jsonrpc" in doc:
        if doc.get("error"):
            raise SolanaParseError(f"RPC error payload: {doc['error']}")
        return doc.get("result")
    return doc


def split_accounts(message: dict, loaded: dict | None = None) -> tuple:
    """Return ``(all_keys, writable, readonly)`` for one transaction message."""
    keys = message.get("accountKeys") or []
    if keys and isinstance(keys[0], dict):
        # jsonParsed encoding already carries the flags and includes loaded addresses
        names = [k["pubkey"] for k in keys]
        writable = [k["pubkey"] for k in keys if k.get("writable")]
        readonly = [k["pubkey"] for k in keys if not k.get("writable")]
        return names, writable, readonly

    header = message.get("header") or {}
    n = len(keys)
    n_signed = int(header.get("numRequiredSignatures", 0))
    ro_signed = int(header.get("numReadonlySignedAccounts", 0))
    ro_unsigned = int(header.get("numReadonlyUnsignedAccounts", 0))
    if n_signed > n or ro_signed > n_signed or ro_unsigned > n - n_signed:
        raise SolanaParseError(
            f"header counts (signed={n_signed}, ro_signed={ro_signed}, ro_unsigned={ro_unsigned}) "
            f"exceed {n} account keys"
        )
    writable = keys[: n_signed - ro_signed] + keys[n_signed : n - ro_unsigned]
    readonly = keys[n_signed - ro_signed : n_signed] + keys[n - ro_unsigned :]
    loaded = loaded or {}
    lw = list(loaded.get("writable") or [])
    lr = list(loaded.get("readonly") or [])
    return list(keys) + lw + lr, writable + lw, readonly + lr


def _program_ids(message: dict, all_keys: list) -> set:
    ids = set()
    for ins in message.get("instructions") or []:
        if "programId" in ins:
            ids.add(ins["programId"])
        elif "programIdIndex" in ins:
            idx = int(ins["programIdIndex"])
            if 0 <= idx < len(all_keys):
                ids.add(all_keys[idx])
    return ids


def parse_solana_transaction(entry: dict, index: int) -> Transaction:
    tx = entry.get("transaction")
    if not isinstance(tx, dict):
        raise SolanaParseError(f"tx {index}: expected json/jsonParsed encoding, got {type(tx).__name__}")
    version = entry.get("version", "legacy")
    if version not in ("legacy", 0, None):
        raise SolanaParseError(f"tx {index}: unsupported transaction version {version!r}")
    message = tx.get("message") or {}
    meta = entry.get("meta") or {}
    try:
        all_keys, writable, readonly = split_accounts(message, meta.get("loadedAddresses"))
    except SolanaParseError as exc:
        raise SolanaParseError(f"tx {index}: {exc}") from exc
    try:
        writes = frozenset(SolanaAccount(k) for k in writable)
        reads = frozenset(SolanaAccount(k) for k in readonly) - writes
    except EncodingError as exc:
        raise SolanaParseError(f"tx {index}: {exc}") from exc
    is_vote = VOTE_PROGRAM_ID in _program_ids(message, all_keys)
    sigs = tx.get("signatures") or []
    return Transaction(
        id=sigs[0] if sigs else f"tx{index}",
        index=index,
        kind=TransactionKind.SOLANA_VOTE if is_vote else TransactionKind.SOLANA_NONVOTE,
        success=meta.get("err") is None,
        access=AccessSet(reads, writes),
    )


def parse_solana(raw, slot: int | None = None) -> BlockWorkload:
    """Parse a ``getBlock`` result (bare or inside a JSON-RPC envelope)."""
    block = _unwrap(raw)
    if not isinstance(block, dict):
        raise SolanaParseError("getBlock result is not an object")
    if slot is None:
        slot = block.get("slot")
    if slot is None:
        if block.get("parentSlot") is None:
            raise SolanaParseError("slot unknown: pass it explicitly")
        slot = int(block["parentSlot"]) + 1
        logger.warning("slot not given; assuming parentSlot+1 = %d", slot)
    txs = [parse_solana_transaction(e, i) for i, e in enumerate(block.get("transactions") or [])]
    metadata = {k: str(block[k]) for k in ("blockhash", "blockTime", "blockHeight", "parentSlot") if block.get(k) is not None}
    return BlockWorkload(Chain.SOLANA, int(slot), txs, metadata)
