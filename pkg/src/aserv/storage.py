"""Key-value store abstraction with key-list (append-per-key) semantics.

The default backend is an embedded in-process map, sharded with one lock
per shard. Per-key operations are linearizable; there is no cross-key
atomicity — readers get cross-key consistency from the ingest watermark,
not from the store.

Values are opaque: producers define every layout ("total|new|t", row
text, ...). The embedded backend stores whatever object it is given
(str or bytes) and returns it unchanged.
"""

from __future__ import annotations

import threading
from typing import Iterable, Iterator


class StoreError(Exception):
    """Backend unavailable or an operation was rejected."""


class KVBackend:
    """Interface every backend implements."""

    def put(self, key: str, value) -> None:
        raise NotImplementedError

    def get(self, key: str):
        """Value under key, or None when absent (absence is not an error)."""
        raise NotImplementedError

    def update(self, key: str, value) -> None:
        """Atomic per-key overwrite; same as put for last-write-wins stores."""
        self.put(key, value)

    def append(self, key: str, item) -> None:
        raise NotImplementedError

    def append_many(self, pairs: Iterable[tuple[str, object]]) -> list[bool]:
        """Batched appends; one ack per item, in order."""
        acks = []
        for key, item in pairs:
            self.append(key, item)
            acks.append(True)
        return acks

    def get_list(self, key: str) -> list:
        raise NotImplementedError

    def scan_prefix(self, prefix: str) -> Iterator[tuple[str, object]]:
        """All (key, value) pairs under a prefix; list keys yield the list."""
        raise NotImplementedError

    def key_count(self) -> int:
        raise NotImplementedError

    def close(self) -> None:
        pass


class MemoryBackend(KVBackend):
    """Embedded in-memory backend with per-shard mutual exclusion.

    Scalar keys (put/get) and list keys (append/get_list) live in separate
    namespaces; reusing one key for both is a programming error and raises.
    """

    def __init__(self, shards: int = 16, max_item_bytes: int = 16 << 20):
        self._nshards = shards
        self._kv: list[dict] = [dict() for _ in range(shards)]
        self._lists: list[dict] = [dict() for _ in range(shards)]
        self._locks = [threading.Lock() for _ in range(shards)]
        self._max_item = max_item_bytes
        self.metrics = {
            "puts": 0,
            "gets": 0,
            "appends": 0,
            "updates": 0,
            "scans": 0,
            "bytes_stored": 0,
        }

    def _shard(self, key: str) -> int:
        return hash(key) % self._nshards

    def _check_size(self, item) -> None:
        if len(item) > self._max_item:
            raise StoreError(f"item of {len(item)} bytes exceeds max {self._max_item}")

    def put(self, key: str, value) -> None:
        if not key:
            raise StoreError("empty key")
        self._check_size(value)
        i = self._shard(key)
        with self._locks[i]:
            if key in self._lists[i]:
                raise StoreError(f"key {key!r} already holds a list")
            old = self._kv[i].get(key)
            self._kv[i][key] = value
            self.metrics["puts"] += 1
            self.metrics["bytes_stored"] += len(value) - (len(old) if old is not None else 0)

    def update(self, key: str, value) -> None:
        self.put(key, value)
        self.metrics["puts"] -= 1
        self.metrics["updates"] += 1

    def get(self, key: str):
        i = self._shard(key)
        with self._locks[i]:
            self.metrics["gets"] += 1
            return self._kv[i].get(key)

    def append(self, key: str, item) -> None:
        if not key:
            raise StoreError("empty key")
        self._check_size(item)
        i = self._shard(key)
        with self._locks[i]:
            if key in self._kv[i]:
                raise StoreError(f"key {key!r} already holds a scalar")
            self._lists[i].setdefault(key, []).append(item)
            self.metrics["appends"] += 1
            self.metrics["bytes_stored"] += len(item)

    def append_many(self, pairs: Iterable[tuple[str, object]]) -> list[bool]:
        """Validates the whole batch before writing anything, so a
        rejected batch leaves no partial appends behind."""
        pairs = list(pairs)
        for key, item in pairs:
            if not key:
                raise StoreError("empty key")
            self._check_size(item)
        acks = []
        for key, item in pairs:
            self.append(key, item)
            acks.append(True)
        return acks

    def get_list(self, key: str) -> list:
        i = self._shard(key)
        with self._locks[i]:
            self.metrics["gets"] += 1
            return list(self._lists[i].get(key, ()))

    def scan_prefix(self, prefix: str) -> Iterator[tuple[str, object]]:
        self.metrics["scans"] += 1
        for i in range(self._nshards):
            with self._locks[i]:
                kv_hits = [(k, v) for k, v in self._kv[i].items() if k.startswith(prefix)]
                list_hits = [
                    (k, list(v)) for k, v in self._lists[i].items() if k.startswith(prefix)
                ]
            yield from kv_hits
            yield from list_hits

    def key_count(self) -> int:
        return sum(len(kv) for kv in self._kv) + sum(len(ls) for ls in self._lists)

    def snapshot_metrics(self) -> dict:
        out = dict(self.metrics)
        out["key_count"] = self.key_count()
        return out


def as_text(value) -> str:
    """Normalize a stored value to text (RESP backends return bytes)."""
    if isinstance(value, bytes):
        return value.decode("utf-8")
    return value
