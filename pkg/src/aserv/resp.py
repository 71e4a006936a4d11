"""Optional client for an external key-value store speaking RESP.

Maps the backend contract onto the usual commands: put/get -> SET/GET,
append -> RPUSH, list read -> LRANGE, prefix scan -> SCAN MATCH. Appends
are pipelined in batches so one network round trip acknowledges a whole
cycle of writes. Never required by tests; enabled by config.
"""

from __future__ import annotations

import socket
import threading
from typing import Iterable, Iterator

from .storage import KVBackend, StoreError

CRLF = b"\r\n"


def encode_command(*args) -> bytes:
    """Encode one command as a RESP array of bulk strings."""
    out = [b"*%d" % len(args), CRLF]
    for arg in args:
        if isinstance(arg, str):
            arg = arg.encode("utf-8")
        elif isinstance(arg, int):
            arg = b"%d" % arg
        out += [b"$%d" % len(arg), CRLF, arg, CRLF]
    return b"".join(out)


class ProtocolReader:
    """Incremental RESP reply parser over a feed() byte stream."""

    def __init__(self):
        self._buf = b""

    def feed(self, data: bytes) -> None:
        self._buf += data

    def try_parse(self):
        """Parse one reply if complete; returns (reply, True) or (None, False)."""
        reply, rest = _parse(self._buf)
        if rest is None:
            return None, False
        self._buf = rest
        return reply, True


def _parse(buf: bytes):
    """Parse one reply from buf; returns (value, remainder) or (None, None) if short."""
    if CRLF not in buf:
        return None, None
    line, rest = buf.split(CRLF, 1)
    kind, payload = line[:1], line[1:]
    if kind == b"+":
        return payload.decode("utf-8"), rest
    if kind == b"-":
        return RespError(payload.decode("utf-8")), rest
    if kind == b":":
        return int(payload), rest
    if kind == b"$":
        n = int(payload)
        if n == -1:
            return None, rest
        if len(rest) < n + 2:
            return None, None
        return rest[:n], rest[n + 2:]
    if kind == b"*":
        n = int(payload)
        if n == -1:
            return None, rest
        items = []
        for _ in range(n):
            item, rest = _parse(rest)
            if rest is None:
                return None, None
            items.append(item)
        return items, rest
    raise StoreError(f"unknown RESP type byte: {kind!r}")


class RespError(Exception):
    """Server-side error reply."""


class RespClient:
    def __init__(self, host: str = "localhost", port: int = 6379, timeout: float = 5.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise StoreError(f"cannot reach store at {host}:{port}: {exc}") from exc
        self._reader = ProtocolReader()
        self._lock = threading.Lock()

    def close(self) -> None:
        self._sock.close()

    def command(self, *args):
        return self.pipeline([args])[0]

    def pipeline(self, commands: list[tuple]) -> list:
        """Send all commands in one write; read one reply per command.
        Serialized internally, so one client may be shared by the
        per-unit worker threads."""
        payload = b"".join(encode_command(*cmd) for cmd in commands)
        with self._lock:
            return self._exchange(payload, len(commands))

    def _exchange(self, payload: bytes, count: int) -> list:
        try:
            self._sock.sendall(payload)
            replies = []
            while len(replies) < count:
                reply, ok = self._reader.try_parse()
                if ok:
                    if isinstance(reply, RespError):
                        raise StoreError(str(reply))
                    replies.append(reply)
                    continue
                data = self._sock.recv(65536)
                if not data:
                    raise StoreError("connection closed mid-reply")
                self._reader.feed(data)
            return replies
        except OSError as exc:
            raise StoreError(f"store i/o failed: {exc}") from exc


class RespBackend(KVBackend):
    """KVBackend over a RESP server; values come back as bytes."""

    def __init__(self, host: str = "localhost", port: int = 6379, batch: int = 512):
        self._client = RespClient(host, port)
        self._batch = batch

    def put(self, key: str, value) -> None:
        self._client.command("SET", key, value)

    def get(self, key: str):
        return self._client.command("GET", key)

    def append(self, key: str, item) -> None:
        self._client.command("RPUSH", key, item)

    def append_many(self, pairs: Iterable[tuple[str, object]]) -> list[bool]:
        pairs = list(pairs)
        acks: list[bool] = []
        for i in range(0, len(pairs), self._batch):
            chunk = pairs[i : i + self._batch]
            replies = self._client.pipeline([("RPUSH", k, v) for k, v in chunk])
            acks.extend(isinstance(r, int) and r > 0 for r in replies)
        return acks

    def get_list(self, key: str) -> list:
        return self._client.command("LRANGE", key, 0, -1) or []

    def scan_prefix(self, prefix: str) -> Iterator[tuple[str, object]]:
        cursor = b"0"
        while True:
            cursor, keys = self._client.command("SCAN", cursor, "MATCH", prefix + "*", "COUNT", 512)
            for key in keys:
                key_s = key.decode("utf-8")
                kind = self._client.command("TYPE", key_s)
                if kind == "list":
                    yield key_s, self.get_list(key_s)
                else:
                    yield key_s, self.get(key_s)
            if cursor == b"0":
                break

    def key_count(self) -> int:
        return int(self._client.command("DBSIZE"))

    def close(self) -> None:
        self._client.close()
