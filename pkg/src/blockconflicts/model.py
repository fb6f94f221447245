"""Chain-agnostic domain types and the canonical workload JSON format."""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import base58

logger = logging.getLogger(__name__)

_HEX_ADDR = re.compile(r"^(0x)?[0-9a-fA-F]{40}$")
_HEX_SLOT = re.compile(r"^(0x)?[0-9a-fA-F]{64}$")


class EncodingError(ValueError):
    """Raised when a state key payload is malformed."""


class WorkloadError(ValueError):
    """Raised when a workload violates a structural invariant."""


def _norm_hex(value: str, pattern: re.Pattern, field_name: str) -> str:
    if not isinstance(value, str) or not pattern.match(value):
        raise EncodingError(f"malformed hex in field {field_name!r}: {value!r}")
    value = value.lower()
    return value if value.startswith("0x") else "0x" + value


@dataclass(frozen=True, order=True)
class EoaAccount:
    address: str

    def __post_init__(self):
        object.__setattr__(self, "address", _norm_hex(self.address, _HEX_ADDR, "address"))

    def encode(self) -> str:
        return f"eoa:{self.address}"


@dataclass(frozen=True, order=True)
class ContractAccount:
    address: str

    def __post_init__(self):
        object.__setattr__(self, "address", _norm_hex(self.address, _HEX_ADDR, "address"))

    def encode(self) -> str:
        return f"code:{self.address}"


@dataclass(frozen=True, order=True)
class ContractStorage:
    contract: str
    slot: str

    def __post_init__(self):
        object.__setattr__(self, "contract", _norm_hex(self.contract, _HEX_ADDR, "contract"))
        object.__setattr__(self, "slot", _norm_hex(self.slot, _HEX_SLOT, "slot"))

    def encode(self) -> str:
        return f"slot:{self.contract}:{self.slot}"


@dataclass(frozen=True, order=True)
class SolanaAccount:
    pubkey: str

    def __post_init__(self):
        try:
            raw = base58.b58decode(self.pubkey)
        except (ValueError, TypeError) as exc:
            raise EncodingError(f"malformed base58 in field 'pubkey': {self.pubkey!r}") from exc
        if len(raw) != 32 or not self.pubkey:
            raise EncodingError(f"malformed base58 in field 'pubkey': {self.pubkey!r} (not 32 bytes)")

    def encode(self) -> str:
        return f"acct:{self.pubkey}"


@dataclass(frozen=True, order=True)
class Generic:
    name: str

    def __post_init__(self):
        if not isinstance(self.name, str):
            raise EncodingError(f"malformed name in field 'name': {self.name!r}")

    def encode(self) -> str:
        return f"gen:{self.name}"


StateKey = Union[EoaAccount, ContractAccount, ContractStorage, SolanaAccount, Generic]


def encode_state_key(key: StateKey) -> str:
    return key.encode()


def decode_state_key(text: str) -> StateKey:
    """Inverse of :func:`encode_state_key`."""
    tag, sep, payload = text.partition(":")
    if not sep:
        raise EncodingError(f"state key without tag: {text!r}")
    if tag == "eoa":
        return EoaAccount(payload)
    if tag == "code":
        return ContractAccount(payload)
    if tag == "slot":
        contract, sep, slot = payload.partition(":")
        if not sep:
            raise EncodingError(f"malformed storage key, missing field 'slot': {text!r}")
        return ContractStorage(contract, slot)
    if tag == "acct":
        return SolanaAccount(payload)
    if tag == "gen":
        return Generic(payload)
    raise EncodingError(f"unknown state key tag {tag!r} in {text!r}")


@dataclass(frozen=True)
class AccessSet:
    reads: frozenset = frozenset()
    writes: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "reads", frozenset(self.reads))
        object.__setattr__(self, "writes", frozenset(self.writes))

    @property
    def accessed(self) -> frozenset:
        return self.reads | self.writes


class TransactionKind(str, enum.Enum):
    ETH_TRANSFER = "eth_transfer"
    CONTRACT_CALL = "contract_call"
    ERC20_TRANSFER = "erc20_transfer"
    SOLANA_VOTE = "solana_vote"
    SOLANA_NONVOTE = "solana_nonvote"
    GENERIC = "generic"


class Chain(str, enum.Enum):
    ETHEREUM = "ethereum"
    SOLANA = "solana"
    GENERIC = "generic"


class AccessMode(str, enum.Enum):
    EXCLUSIVE = "exclusive"
    READ_WRITE = "rw"


class SuccessFilter(str, enum.Enum):
    ALL = "all"
    SUCCESSFUL_ONLY = "successful"


@dataclass(frozen=True)
class Transaction:
    id: str
    index: int
    kind: TransactionKind = TransactionKind.GENERIC
    success: bool = True
    access: AccessSet = field(default_factory=AccessSet)


@dataclass(frozen=True)
class BlockWorkload:
    """An ordered block of transactions; the unit of analysis.

    ``transactions`` is kept in preset order and indices must be exactly
    ``0..n-1``. Nothing is reindexed silently.
    """

    chain: Chain
    block_number: int
    transactions: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "chain", Chain(self.chain))
        object.__setattr__(self, "transactions", tuple(self.transactions))
        object.__setattr__(self, "metadata", dict(self.metadata))
        if not isinstance(self.block_number, int) or self.block_number < 0:
            raise WorkloadError(f"block_number must be a non-negative integer, got {self.block_number!r}")
        for pos, tx in enumerate(self.transactions):
            if tx.index != pos:
                raise WorkloadError(
                    f"block {self.block_number}: preset index {tx.index} at position {pos}; "
                    "indices must be contiguous 0..n-1 in order"
                )
        if self.chain is Chain.SOLANA:
            for tx in self.transactions:
                if tx.kind not in (TransactionKind.SOLANA_VOTE, TransactionKind.SOLANA_NONVOTE):
                    raise WorkloadError(f"solana tx {tx.id} has non-solana kind {tx.kind.value}")

    def __len__(self) -> int:
        return len(self.transactions)

    @property
    def coinbase(self) -> str | None:
        return self.metadata.get("coinbase")


@dataclass(frozen=True)
class AnalysisConfig:
    coinbase_filter: bool = True
    access_mode: AccessMode = AccessMode.READ_WRITE
    include_voting: bool = False
    success_filter: SuccessFilter = SuccessFilter.ALL

    @classmethod
    def for_chain(cls, chain: Chain | str, **overrides) -> "AnalysisConfig":
        """Per-chain defaults: Ethereum uses exclusive access with the coinbase
        filter, Solana read/write sets without votes, generic plain read/write."""
        chain = Chain(chain)
        if chain is Chain.ETHEREUM:
            base = dict(coinbase_filter=True, access_mode=AccessMode.EXCLUSIVE)
        elif chain is Chain.SOLANA:
            base = dict(coinbase_filter=False, access_mode=AccessMode.READ_WRITE, include_voting=False)
        else:
            base = dict(coinbase_filter=False, access_mode=AccessMode.READ_WRITE)
        base.update(overrides)
        return cls(**base)


def coinbase_keys(coinbase: str) -> frozenset:
    return frozenset({EoaAccount(coinbase), ContractAccount(coinbase)})


def effective_access(tx: Transaction, cfg: AnalysisConfig, coinbase: str | None = None) -> AccessSet:
    """The access set used for conflict detection under ``cfg``."""
    reads, writes = tx.access.reads, tx.access.writes
    if cfg.access_mode is AccessMode.EXCLUSIVE:
        reads, writes = frozenset(), reads | writes
    if cfg.coinbase_filter and coinbase:
        drop = coinbase_keys(coinbase)
        reads, writes = reads - drop, writes - drop
    if reads is tx.access.reads and writes is tx.access.writes:
        return tx.access
    return AccessSet(reads, writes)


def effective_accesses(wl: BlockWorkload, cfg: AnalysisConfig) -> list:
    coinbase = wl.coinbase
    if cfg.coinbase_filter and not coinbase and wl.chain is not Chain.GENERIC:
        logger.warning("block %d: coinbase filter requested but no coinbase in metadata", wl.block_number)
    return [effective_access(tx, cfg, coinbase) for tx in wl.transactions]


# canonical JSON

def _encode_keys(keys: Iterable) -> list:
    return sorted(k.encode() for k in keys)


def workload_to_dict(wl: BlockWorkload) -> dict:
    return {
        "chain": wl.chain.value,
        "block_number": wl.block_number,
        "metadata": dict(sorted(wl.metadata.items())),
        "transactions": [
            {
                "id": tx.id,
                "index": tx.index,
                "kind": tx.kind.value,
                "success": tx.success,
                "reads": _encode_keys(tx.access.reads),
                "writes": _encode_keys(tx.access.writes),
            }
            for tx in wl.transactions
        ],
    }


def workload_from_dict(data: dict) -> BlockWorkload:
    try:
        txs = [
            Transaction(
                id=str(t["id"]),
                index=int(t["index"]),
                kind=TransactionKind(t.get("kind", "generic")),
                success=bool(t.get("success", True)),
                access=AccessSet(
                    frozenset(decode_state_key(k) for k in t.get("reads", [])),
                    frozenset(decode_state_key(k) for k in t.get("writes", [])),
                ),
            )
            for t in data["transactions"]
        ]
        metadata = {str(k): str(v) for k, v in (data.get("metadata") or {}).items()}
        return BlockWorkload(Chain(data["chain"]), int(data["block_number"]), txs, metadata)
    except (KeyError, TypeError) as exc:
        raise WorkloadError(f"malformed workload JSON: {exc!r}") from exc


def is_canonical_workload(data) -> bool:
    return isinstance(data, dict) and "chain" in data and "block_number" in data and "transactions" in data


def dumps_workload(wl: BlockWorkload) -> str:
    return json.dumps(workload_to_dict(wl), indent=1) + "\n"


def save_workload(wl: BlockWorkload, path) -> Path:
    path = Path(path)
    path.write_text(dumps_workload(wl), encoding="utf-8")
    return path


def load_workload(path) -> BlockWorkload:
    with open(path, encoding="utf-8") as fh:
        return workload_from_dict(json.load(fh))


def workload_filename(wl: BlockWorkload) -> str:
    return f"{wl.chain.value}-{wl.block_number}.json"
