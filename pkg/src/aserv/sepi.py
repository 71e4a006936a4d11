"""Single-endpoint interval index, plus the two-record endpoint baseline.

The single-endpoint index keeps exactly one key-value pair per event:
key "sepi:<unit>:<oid>|<stime>", value the event's live end cycle. While
an event stays flagged its value advances; absence from a cycle's Eset
closes it implicitly and the last value stands as etime. One prefix scan
plus one predicate answers any interval query, with no deduplication.

The baseline keeps a start record and an end record per event and needs
two scans plus a distinct pass; it exists for comparison and must return
identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import keys
from .domain import Eset, ScientificEvent, TimeInterval, format_eid
from .storage import KVBackend, as_text


@dataclass
class QueryStats:
    scans: int = 0
    dedup_passes: int = 0


class SepiIndex:
    def __init__(self, store: KVBackend, unit: str):
        self.store = store
        self.unit = unit
        self.last_query_stats = QueryStats()

    def update(self, eset: Eset, active: Mapping[str, str], t: int) -> dict[str, str]:
        """Apply one cycle's Eset; returns the new oid->eid active map.

        Newly flagged oids open an event (value = t); still-flagged ones
        advance their value to t; active oids absent from the Eset close
        with their last value as etime (the key is retained).
        """
        new_active: dict[str, str] = {}
        for oid in eset.oids:
            eid = active.get(oid)
            if eid is None:
                eid = format_eid(oid, t)
                self.store.put(keys.sepi_key(self.unit, oid, t), str(t))
            else:
                stime = int(eid.rpartition("|")[2])
                self.store.update(keys.sepi_key(self.unit, oid, stime), str(t))
            new_active[oid] = eid
        return new_active

    def query(self, interval: TimeInterval, watermark: int | None = None) -> set[ScientificEvent]:
        """Events whose [stime, etime] intersects the interval.

        One scan over the index prefix; the intersection predicate is
        etime >= ts and stime <= te. Open events track the current cycle,
        so a query ending at "now" sees them. A watermark caps what is
        visible: events that started later are hidden and live end times
        are clamped, which equals querying a frozen copy of the store
        because flagged runs are contiguous.
        """
        stats = QueryStats(scans=1)
        found: set[ScientificEvent] = set()
        for key, value in self.store.scan_prefix(keys.sepi_prefix(self.unit)):
            _, oid, stime = keys.parse_sepi_key(key)
            etime = int(as_text(value))
            if watermark is not None:
                if stime > watermark:
                    continue
                etime = min(etime, watermark)
            if etime >= interval.ts and stime <= interval.te:
                found.add(ScientificEvent(format_eid(oid, stime), oid, stime, etime))
        self.last_query_stats = stats
        return found

    def lookup(self, eid: str, watermark: int | None = None) -> ScientificEvent | None:
        """Resolve one event id, honoring the watermark like query()."""
        oid, stime = eid.rpartition("|")[0], int(eid.rpartition("|")[2])
        value = self.store.get(keys.sepi_key(self.unit, oid, stime))
        if value is None:
            return None
        etime = int(as_text(value))
        if watermark is not None:
            if stime > watermark:
                return None
            etime = min(etime, watermark)
        return ScientificEvent(eid, oid, stime, etime)

    def entry_count(self) -> int:
        return sum(1 for _ in self.store.scan_prefix(keys.sepi_prefix(self.unit)))


class EpiIndex:
    """Endpoint-pair baseline: two records and two scans per query."""

    def __init__(self, store: KVBackend, unit: str):
        self.store = store
        self.unit = unit
        self.last_query_stats = QueryStats()

    def update(self, eset: Eset, active: Mapping[str, str], t: int) -> dict[str, str]:
        new_active: dict[str, str] = {}
        for oid in eset.oids:
            eid = active.get(oid)
            if eid is None:
                eid = format_eid(oid, t)
                self.store.put(keys.epi_start_key(self.unit, oid, t), f"{t}|{t}")
                self.store.put(keys.epi_end_key(self.unit, oid, t), str(t))
            else:
                stime = int(eid.rpartition("|")[2])
                # end time rides along on the start record for the piercing scan
                self.store.update(keys.epi_start_key(self.unit, oid, stime), f"{stime}|{t}")
                self.store.update(keys.epi_end_key(self.unit, oid, stime), str(t))
            new_active[oid] = eid
        return new_active

    def query(self, interval: TimeInterval, watermark: int | None = None) -> set[ScientificEvent]:
        """Scan 1 walks both record kinds and keeps events with an
        endpoint inside [ts, te]; a distinct pass removes events found
        through both endpoints. Scan 2 walks the start records for events
        piercing the interval (stime < ts and etime > te). The union of
        the two sets is the answer.
        """
        stats = QueryStats()
        candidates: list[ScientificEvent] = []

        stats.scans += 1
        for key, value in self.store.scan_prefix(keys.epi_prefix(self.unit)):
            _, kind, oid, stime = keys.parse_epi_key(key)
            if watermark is not None and stime > watermark:
                continue
            if kind == "s":
                ev = self._event_from_start(oid, stime, value, watermark)
                if interval.ts <= ev.stime <= interval.te:
                    candidates.append(ev)
            else:
                etime = int(as_text(value))
                if watermark is not None:
                    etime = min(etime, watermark)
                if interval.ts <= etime <= interval.te:
                    candidates.append(ScientificEvent(format_eid(oid, stime), oid, stime, etime))

        stats.dedup_passes += 1
        in_range = set(candidates)

        stats.scans += 1
        piercing: set[ScientificEvent] = set()
        for key, value in self.store.scan_prefix(keys.epi_prefix(self.unit, "s")):
            _, _, oid, stime = keys.parse_epi_key(key)
            if watermark is not None and stime > watermark:
                continue
            ev = self._event_from_start(oid, stime, value, watermark)
            if ev.stime < interval.ts and ev.etime > interval.te:
                piercing.add(ev)

        self.last_query_stats = stats
        return in_range | piercing

    def _event_from_start(self, oid: str, stime: int, value, watermark: int | None) -> ScientificEvent:
        etime = int(as_text(value).rpartition("|")[2])
        if watermark is not None:
            etime = min(etime, watermark)
        return ScientificEvent(format_eid(oid, stime), oid, stime, etime)

    def entry_count(self) -> int:
        return sum(1 for _ in self.store.scan_prefix(keys.epi_prefix(self.unit)))
