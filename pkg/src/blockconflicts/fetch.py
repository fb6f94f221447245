"""JSON-RPC clients that download raw blocks into an on-disk cache.

Responses are cached byte-for-byte as the endpoint returned them. Files are
written to a temp name and renamed into place, so a crash never leaves a
partial cache entry. Skipped Solana slots get a ``.skipped`` marker so a
second pass over the same range makes no requests.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .constants import SOLANA_SKIPPED_SLOT_CODES
from .model import Chain

logger = logging.getLogger(__name__)

ENV_VARS = {Chain.ETHEREUM: "ETH_RPC_URL", Chain.SOLANA: "SOL_RPC_URL"}
MANIFEST_NAME = "manifest.jsonl"


class RpcError(Exception):
    def __init__(self, message: str, code: int | None = None):
        super().__init__(message)
        self.code = code


class MissingEndpointError(ValueError):
    pass


def resolve_endpoint(chain: Chain | str, url: str | None = None) -> str:
    chain = Chain(chain)
    url = url or os.environ.get(ENV_VARS.get(chain, ""), "")
    if not url:
        raise MissingEndpointError(f"no RPC URL: pass --rpc-url or set {ENV_VARS.get(chain)}")
    return url


@dataclass
class FetchTarget:
    chain: Chain
    endpoint: str
    start: int
    end: int
    cache_dir: Path
    timeout: float = 30.0
    max_retries: int = 5
    rate: float = 4.0  # requests per second
    concurrency: int = 1
    force: bool = False

    def __post_init__(self):
        self.chain = Chain(self.chain)
        self.cache_dir = Path(self.cache_dir)
        if self.start > self.end:
            raise ValueError(f"block range start {self.start} > end {self.end}")
        if self.rate <= 0:
            raise ValueError(f"rate limit must be > 0, got {self.rate}")
        if self.max_retries < 0 or self.concurrency < 1:
            raise ValueError("max_retries must be >= 0 and concurrency >= 1")

    @property
    def blocks(self) -> range:
        return range(self.start, self.end + 1)


class RateLimiter:
    """Spaces request starts at least ``1/rate`` seconds apart across threads."""

    def __init__(self, rate: float, clock=time.monotonic, sleep=time.sleep):
        self.interval = 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            start = max(now, self._next)
            self._next = start + self.interval
        if start > now:
            self._sleep(start - now)


class RpcClient:
    """Minimal JSON-RPC over HTTP with rate limiting and exponential backoff."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        max_retries: int = 5,
        rate: float = 4.0,
        http: httpx.Client | None = None,
        sleep=time.sleep,
        backoff: float = 0.5,
    ):
        self.endpoint = endpoint
        self.max_retries = max_retries
        self.http = http or httpx.Client(timeout=timeout)
        self.limiter = RateLimiter(rate, sleep=sleep)
        self._sleep = sleep
        self.backoff = backoff
        self.requests = 0
        self._lock = threading.Lock()
        self._ids = 0

    def call(self, method: str, params: list) -> str:
        """Return the raw response body; raise :class:`RpcError` after retries.

        JSON-RPC errors in ``SOLANA_SKIPPED_SLOT_CODES`` are raised at once
        without retrying.
        """
        last = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            self.limiter.wait()
            with self._lock:
                self.requests += 1
                self._ids += 1
                req_id = self._ids
            body = {"jsonrpc": "2.0", "id": req_id, "method": method, "params": params}
            try:
                resp = self.http.post(self.endpoint, json=body)
            except httpx.HTTPError as exc:
                last = RpcError(f"{method}: {type(exc).__name__}: {exc}")
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = RpcError(f"{method}: HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise RpcError(f"{method}: HTTP {resp.status_code}")
            text = resp.text
            try:
                doc = json.loads(text)
            except json.JSONDecodeError:
                last = RpcError(f"{method}: response is not JSON")
                continue
            err = doc.get("error") if isinstance(doc, dict) else None
            if err:
                code = err.get("code") if isinstance(err, dict) else None
                msg = err.get("message") if isinstance(err, dict) else str(err)
                if code in SOLANA_SKIPPED_SLOT_CODES:
                    raise RpcError(f"{method}: {msg}", code)
                last = RpcError(f"{method}: RPC error {code}: {msg}", code)
                continue
            return text
        raise last


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class FetchResult:
    chain: Chain
    block: int
    status: str  # cached | fetched | skipped | failed
    paths: tuple = ()
    error: str = ""


def eth_paths(cache: Path, n: int) -> tuple:
    return cache / f"eth-{n}.block.json", cache / f"eth-{n}.trace.json"


def sol_path(cache: Path, slot: int) -> Path:
    return cache / f"sol-{slot}.block.json"


def sol_skip_marker(cache: Path, slot: int) -> Path:
    return cache / f"sol-{slot}.skipped"


def fetch_ethereum_block(target: FetchTarget, n: int, client: RpcClient) -> FetchResult:
    block_path, trace_path = eth_paths(target.cache_dir, n)
    if not target.force and block_path.exists() and trace_path.exists():
        return FetchResult(Chain.ETHEREUM, n, "cached", (block_path, trace_path))
    try:
        block = client.call("eth_getBlockByNumber", [hex(n), True])
        if json.loads(block).get("result") is None:
            raise RpcError(f"eth_getBlockByNumber: block {n} not found")
        trace = client.call("debug_traceBlockByNumber", [hex(n), {"tracer": "prestateTracer"}])
    except RpcError as exc:
        return FetchResult(Chain.ETHEREUM, n, "failed", error=str(exc))
    atomic_write(block_path, block)
    atomic_write(trace_path, trace)
    return FetchResult(Chain.ETHEREUM, n, "fetched", (block_path, trace_path))


def fetch_solana_block(target: FetchTarget, slot: int, client: RpcClient) -> FetchResult:
    path = sol_path(target.cache_dir, slot)
    marker = sol_skip_marker(target.cache_dir, slot)
    if not target.force:
        if path.exists():
            return FetchResult(Chain.SOLANA, slot, "cached", (path,))
        if marker.exists():
            return FetchResult(Chain.SOLANA, slot, "skipped", (marker,), "cached skip marker")
    params = [slot, {"encoding": "json", "maxSupportedTransactionVersion": 0, "transactionDetails": "full", "rewards": False}]
    try:
        text = client.call("getBlock", params)
    except RpcError as exc:
        if exc.code in SOLANA_SKIPPED_SLOT_CODES:
            atomic_write(marker, json.dumps({"slot": slot, "reason": str(exc)}) + "\n")
            return FetchResult(Chain.SOLANA, slot, "skipped", (marker,), str(exc))
        return FetchResult(Chain.SOLANA, slot, "failed", error=str(exc))
    if json.loads(text).get("result") is None:
        atomic_write(marker, json.dumps({"slot": slot, "reason": "null result"}) + "\n")
        return FetchResult(Chain.SOLANA, slot, "skipped", (marker,), "null result")
    atomic_write(path, text)
    return FetchResult(Chain.SOLANA, slot, "fetched", (path,))


@dataclass
class FetchSummary:
    results: list = field(default_factory=list)
    requests: int = 0

    def count(self, status: str) -> int:
        return sum(r.status == status for r in self.results)

    @property
    def failures(self) -> list:
        return [r for r in self.results if r.status == "failed"]


def requests_per_block(chain: Chain) -> int:
    return 2 if Chain(chain) is Chain.ETHEREUM else 1


def estimate_seconds(target: FetchTarget, n_blocks: int | None = None) -> float:
    """Lower bound on wall time imposed by the rate limit."""
    n = len(target.blocks) if n_blocks is None else n_blocks
    return n * requests_per_block(target.chain) / target.rate


def is_cached(target: FetchTarget, n: int) -> bool:
    if target.force:
        return False
    if target.chain is Chain.ETHEREUM:
        return all(p.exists() for p in eth_paths(target.cache_dir, n))
    return sol_path(target.cache_dir, n).exists() or sol_skip_marker(target.cache_dir, n).exists()


def fetch_range(target: FetchTarget, client: RpcClient | None = None) -> FetchSummary:
    """Fetch every block of ``target`` not already cached.

    Skipped and failed blocks are appended to ``<cache>/manifest.jsonl``.
    """
    target.cache_dir.mkdir(parents=True, exist_ok=True)
    if client is None:
        client = RpcClient(target.endpoint, target.timeout, target.max_retries, target.rate)
    fetch_one = fetch_ethereum_block if target.chain is Chain.ETHEREUM else fetch_solana_block
    manifest_lock = threading.Lock()
    manifest = target.cache_dir / MANIFEST_NAME

    def work(n):
        res = fetch_one(target, n, client)
        if res.status in ("failed", "skipped") and res.error != "cached skip marker":
            line = json.dumps({"chain": res.chain.value, "block": res.block, "status": res.status, "error": res.error})
            with manifest_lock, open(manifest, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        if res.status == "failed":
            logger.warning("%s block %d failed: %s", res.chain.value, n, res.error)
        return res

    if target.concurrency == 1:
        results = [work(n) for n in target.blocks]
    else:
        with ThreadPoolExecutor(max_workers=target.concurrency) as pool:
            results = list(pool.map(work, target.blocks))
    return FetchSummary(results, client.requests)
