"""Real-time insertion pipeline, master/worker form.

Each unit has one worker. Per cycle it filters the catalog, appends the
reduced rows grouped by partition (one append per partition per cycle),
appends full event rows under their event ids, updates the interval
index, and emits count records. The master tracks per-unit commits and
advances a global read watermark to the lowest committed cycle; queries
only ever see cycles at or below it, so a mid-cycle failure is invisible.

A failed store write is retried a configured number of times, then the
unit stalls on that cycle: its state is unchanged and the same batch can
be resubmitted after the store recovers.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

from . import keys
from .dafilter import filter_cycle
from .domain import CatalogTuple, Eset
from .epgrid import PartitionGrid, partition_of
from .pcag import ICR, ActiveEvent, emit_icrs
from .rows import format_event_row, format_valid_row
from .sepi import EpiIndex, SepiIndex
from .storage import KVBackend, StoreError

log = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class CycleBatch:
    unit_id: str
    t: int
    catalog: Sequence[CatalogTuple]
    eset: Eset

    def __post_init__(self) -> None:
        if self.eset.t != self.t:
            raise ValueError(f"eset is for cycle {self.eset.t}, batch is {self.t}")
        if any(r.t != self.t for r in self.catalog):
            raise ValueError(f"catalog row with t != {self.t}")


@dataclass(frozen=True)
class IngestStats:
    unit_id: str
    t: int
    latency_s: float
    rows: int
    valid_bytes: int
    event_bytes: int
    icr_bytes: int
    appends: int
    new_events: int
    unmatched_oids: int
    key_count: int
    icrs: tuple[ICR, ...] = ()

    @property
    def bytes_written(self) -> int:
        return self.valid_bytes + self.event_bytes + self.icr_bytes


class UnitStalled(Exception):
    def __init__(self, unit_id: str, t: int, phase: str):
        super().__init__(f"unit {unit_id} stalled at cycle {t} during {phase}")
        self.unit_id = unit_id
        self.t = t
        self.phase = phase


class UnitWorker:
    def __init__(self, unit_id: str, grid: PartitionGrid, store: KVBackend,
                 c: int = 1, epi_enabled: bool = False, max_retries: int = 2):
        if c < 1:
            raise ValueError("c must be >= 1")
        self.unit_id = unit_id
        self.grid = grid
        self.store = store
        self.c = c
        self.max_retries = max_retries
        self.sepi = SepiIndex(store, unit_id)
        self.epi = EpiIndex(store, unit_id) if epi_enabled else None
        self._active: dict[str, str] = {}
        self._registry: dict[str, ActiveEvent] = {}
        self._last_t = 0

    @property
    def committed_t(self) -> int:
        return self._last_t

    def _retry(self, fn: Callable[[], T], t: int, phase: str) -> T:
        last: StoreError | None = None
        for attempt in range(self.max_retries + 1):
            try:
                return fn()
            except StoreError as exc:
                last = exc
                log.warning("unit %s cycle %d: %s failed (attempt %d): %s",
                            self.unit_id, t, phase, attempt + 1, exc)
        raise UnitStalled(self.unit_id, t, phase) from last

    def _append_all(self, pairs: list[tuple[str, str]], t: int, phase: str) -> None:
        if not pairs:
            return

        def go() -> None:
            acks = self.store.append_many(pairs)
            if not all(acks):
                raise StoreError(f"{phase}: {acks.count(False)} appends rejected")

        self._retry(go, t, phase)

    def process_cycle(self, batch: CycleBatch) -> IngestStats:
        """One cycle end to end; worker state advances only after every
        write succeeded, so a stalled cycle can be resubmitted as-is."""
        if batch.unit_id != self.unit_id:
            raise ValueError(f"batch for {batch.unit_id} fed to {self.unit_id}")
        t = batch.t
        if t != self._last_t + 1:
            raise ValueError(f"expected cycle {self._last_t + 1}, got {t}")
        t0 = time.perf_counter()

        out = filter_cycle(batch.catalog, batch.eset, self._active, self.c)
        eset = Eset(t, frozenset(batch.eset.oids - out.unmatched_oids))

        by_cell: dict[int, list[str]] = {}
        for row in out.valid:
            _, cell = partition_of(self.grid, row.x, row.y)
            by_cell.setdefault(cell, []).append(format_valid_row(row))
        part_pairs = [(keys.part_key(self.unit_id, cell), "\n".join(lines))
                      for cell, lines in by_cell.items()]

        ev_pairs: list[tuple[str, str]] = []
        pid_by_oid: dict[str, keys.Pid] = {}
        for eid, row in out.event_rows.items():
            known = self._registry.get(row.oid)
            pid = known.pid if known is not None else partition_of(self.grid, row.x, row.y)
            pid_by_oid[row.oid] = pid
            ev_pairs.append((keys.ev_key(eid), format_event_row(pid, row)))

        self._append_all(part_pairs, t, "partition data")
        self._append_all(ev_pairs, t, "event rows")

        new_active = self._retry(
            lambda: self.sepi.update(eset, self._active, t), t, "interval index")
        if self.epi is not None:
            self._retry(lambda: self.epi.update(eset, self._active, t),
                        t, "endpoint index")

        registry: dict[str, ActiveEvent] = {}
        for oid in eset.oids:
            known = self._registry.get(oid)
            if known is None:
                registry[oid] = ActiveEvent(new_active[oid], oid, t, pid_by_oid[oid])
            else:
                registry[oid] = known

        icrs = emit_icrs(registry.values(), t)
        icr_pairs = [(keys.icr_key(*icr.pid), icr.value()) for icr in icrs]
        self._append_all(icr_pairs, t, "count records")

        self._active = new_active
        self._registry = registry
        self._last_t = t

        new_events = sum(1 for ae in registry.values() if ae.stime == t)
        return IngestStats(
            unit_id=self.unit_id,
            t=t,
            latency_s=time.perf_counter() - t0,
            rows=len(batch.catalog),
            valid_bytes=sum(len(v) for _, v in part_pairs),
            event_bytes=sum(len(v) for _, v in ev_pairs),
            icr_bytes=sum(len(v) for _, v in icr_pairs),
            appends=len(part_pairs) + len(ev_pairs) + len(icr_pairs),
            new_events=new_events,
            unmatched_oids=len(out.unmatched_oids),
            key_count=self.store.key_count(),
            icrs=tuple(icrs),
        )


class Master:
    """Registers workers, tracks heartbeats and per-unit commits, owns
    the watermark, and fans per-cycle records out to feed subscribers
    only once the cycle is at or below the watermark."""

    def __init__(self):
        self._lock = threading.Lock()
        self._committed: dict[str, int] = {}
        self._last_seen: dict[str, float] = {}
        self._last_stats: dict[str, IngestStats] = {}
        self._pending: dict[int, list[IngestStats]] = {}
        self._watermark = 0
        self._published_t = 0
        self._subs: list[queue.Queue] = []

    def register(self, unit_id: str) -> None:
        with self._lock:
            if unit_id in self._committed:
                raise ValueError(f"unit {unit_id} already registered")
            self._committed[unit_id] = 0
            self._last_seen[unit_id] = time.monotonic()

    def heartbeat(self, unit_id: str, now: float | None = None) -> None:
        with self._lock:
            if unit_id not in self._committed:
                raise ValueError(f"unit {unit_id} not registered")
            self._last_seen[unit_id] = time.monotonic() if now is None else now

    def stalled_units(self, timeout: float, now: float | None = None) -> set[str]:
        now = time.monotonic() if now is None else now
        with self._lock:
            return {u for u, seen in self._last_seen.items() if now - seen > timeout}

    @property
    def watermark(self) -> int:
        with self._lock:
            return self._watermark

    @property
    def units(self) -> dict[str, int]:
        with self._lock:
            return dict(self._committed)

    def last_stats(self, unit_id: str) -> IngestStats | None:
        with self._lock:
            return self._last_stats.get(unit_id)

    def commit(self, unit_id: str, stats: IngestStats) -> int:
        """Record one unit's cycle; returns the (possibly advanced)
        watermark. Commits must arrive in cycle order per unit."""
        records: list[dict] = []
        with self._lock:
            if unit_id not in self._committed:
                raise ValueError(f"unit {unit_id} not registered")
            if stats.t != self._committed[unit_id] + 1:
                raise ValueError(
                    f"unit {unit_id} commit for cycle {stats.t}, "
                    f"expected {self._committed[unit_id] + 1}")
            self._committed[unit_id] = stats.t
            self._last_seen[unit_id] = time.monotonic()
            self._last_stats[unit_id] = stats
            self._pending.setdefault(stats.t, []).append(stats)
            wm = min(self._committed.values())
            if wm > self._watermark:
                self._watermark = wm
            while self._published_t < self._watermark:
                self._published_t += 1
                batch = self._pending.pop(self._published_t, [])
                records.append(self._feed_record(self._published_t, batch))
            subs = list(self._subs)
            wm = self._watermark
        for record in records:
            for q in subs:
                try:
                    q.put_nowait(record)
                except queue.Full:
                    pass
        return wm

    def _feed_record(self, t: int, batch: list[IngestStats]) -> dict:
        deltas = [
            {"pid": keys.pid_str(icr.pid), "total": icr.total, "new": icr.new}
            for stats in batch for icr in stats.icrs
        ]
        return {
            "t": t,
            "watermark": self._watermark,
            "latency": max((s.latency_s for s in batch), default=0.0),
            "new_events": sum(s.new_events for s in batch),
            "deltas": deltas,
        }

    def subscribe(self, maxsize: int = 1024) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=maxsize)
        with self._lock:
            self._subs.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subs:
                self._subs.remove(q)
