"""Probing, listing, and stretching analyses over the stored structures,
plus the precise count oracle used to measure probing accuracy.

All reads are snapshotted at the ingest watermark: data written for
cycles above it is invisible, so concurrent ingest never changes an
answer mid-query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

from . import keys
from .domain import (CatalogTuple, Region, ScientificEvent, TimeInterval,
                     ValidTuple, contains)
from .epgrid import PartitionGrid, parse_region
from .pcag import pcag_count
from .rows import parse_event_row, parse_valid_row
from .sepi import SepiIndex
from .storage import KVBackend, as_text


class IntegrityError(Exception):
    """Stored structures disagree (index names an event with no rows)."""


def _stored_texts(items) -> list[str]:
    """List items as text, dropping exact consecutive duplicates: a
    resubmitted cycle may re-append a batch the stalled run already
    wrote, and the copy always lands adjacent because one worker owns
    each key."""
    out: list[str] = []
    for item in items:
        text = as_text(item)
        if out and out[-1] == text:
            continue
        out.append(text)
    return out


class UnknownEventError(KeyError):
    """The requested event id is not visible in any unit's index."""


@dataclass(frozen=True)
class EventSeries:
    event: ScientificEvent
    pid: keys.Pid
    rows: tuple[CatalogTuple, ...]


@dataclass(frozen=True)
class SeriesRange:
    oid: str
    eid: str
    ts: int
    te: int
    rows: tuple[ValidTuple, ...]


@dataclass(frozen=True)
class AccuracyResult:
    probe: int
    pcse: int

    @property
    def accuracy(self) -> float:
        if self.probe == 0:
            return 1.0
        return self.pcse / self.probe


class QueryEngine:
    def __init__(self, store: KVBackend, grids: Mapping[str, PartitionGrid],
                 watermark: Callable[[], int] | int | None = None):
        self.store = store
        self.grids = dict(grids)
        self._wm_source = watermark
        self._sepi = {unit: SepiIndex(store, unit) for unit in self.grids}

    def watermark(self) -> int | None:
        src = self._wm_source
        return src() if callable(src) else src

    def region_pids(self, reg: Region) -> set[keys.Pid]:
        pids: set[keys.Pid] = set()
        for grid in self.grids.values():
            pids |= parse_region(grid, reg)
        return pids

    def events_in(self, interval: TimeInterval) -> set[ScientificEvent]:
        wm = self.watermark()
        found: set[ScientificEvent] = set()
        for sepi in self._sepi.values():
            found |= sepi.query(interval, wm)
        return found

    def probe(self, reg: Region | None, interval: TimeInterval) -> int:
        """How many events intersect the interval, counting every event
        whose partition the region touches (a superset of the disk)."""
        pids = None if reg is None else self.region_pids(reg)
        if pids is not None and not pids:
            return 0
        return pcag_count(self.store, pids, interval, self.watermark())

    def _load_series(self, event: ScientificEvent) -> EventSeries:
        stored = _stored_texts(self.store.get_list(keys.ev_key(event.eid)))
        rows = []
        pid: keys.Pid | None = None
        for item in stored:
            row_pid, row = parse_event_row(item)
            if pid is None:
                pid = row_pid
            if row.t <= event.etime:
                rows.append(row)
        if pid is None or not rows:
            raise IntegrityError(f"event {event.eid} has no stored rows")
        rows.sort(key=lambda r: r.t)
        return EventSeries(event=event, pid=pid, rows=tuple(rows))

    def list_events(self, reg: Region | None,
                    interval: TimeInterval) -> list[EventSeries]:
        """Full series for every matching event, even when it only
        partially overlaps the interval. Region filtering is by the
        event's stored partition, consistent with probing."""
        events = sorted(self.events_in(interval),
                        key=lambda e: (e.stime, e.eid))
        pids = None if reg is None else self.region_pids(reg)
        out = []
        for event in events:
            series = self._load_series(event)
            if pids is not None and series.pid not in pids:
                continue
            out.append(series)
        return out

    def _resolve(self, eid: str) -> ScientificEvent:
        wm = self.watermark()
        for sepi in self._sepi.values():
            event = sepi.lookup(eid, wm)
            if event is not None:
                return event
        raise UnknownEventError(eid)

    def stretch(self, eid: str, dt1: int, dt2: int) -> SeriesRange:
        """Rows of the event's object over [stime-dt1, etime+dt2], read
        from the event's single partition and clipped to [0, watermark]."""
        if dt1 < 0 or dt2 < 0:
            raise ValueError("dt1 and dt2 must be >= 0")
        event = self._resolve(eid)
        wm = self.watermark()
        lo = max(0, event.stime - dt1)
        hi = event.etime + dt2
        if wm is not None:
            hi = min(hi, wm)
        pid = self._load_series(event).pid
        rows = []
        for batch in _stored_texts(self.store.get_list(keys.part_key(*pid))):
            for line in batch.split("\n"):
                row = parse_valid_row(line)
                if row.oid == event.oid and lo <= row.t <= hi:
                    rows.append(row)
        rows.sort(key=lambda r: r.t)
        return SeriesRange(oid=event.oid, eid=eid, ts=lo, te=hi,
                           rows=tuple(rows))

    def pcse_count(self, reg: Region, interval: TimeInterval) -> int:
        """Exact count: list the interval's events and keep those whose
        recorded position really falls inside the disk."""
        count = 0
        for event in self.events_in(interval):
            first = self._load_series(event).rows[0]
            if contains(reg, first.x, first.y):
                count += 1
        return count

    def accuracy(self, reg: Region, interval: TimeInterval) -> AccuracyResult:
        return AccuracyResult(probe=self.probe(reg, interval),
                              pcse=self.pcse_count(reg, interval))
