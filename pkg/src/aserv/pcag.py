"""Partition count aggregation: per-cycle per-partition count records and
the merge that answers probing queries without touching event data.

For every cycle and every partition holding at least one active event,
one record "total|new|t" is appended to that partition's count list
(total = events active this cycle, new = events that started this
cycle). Partitions with nothing active emit nothing, and a missing
record reads as zero, which bounds record volume by active events rather
than by cells x cycles.

The count of events in partition p intersecting [ts, te] is then

    count(p) = total(ts) + sum of new(i) for i in (ts, te]

because an intersecting event either is already active at ts or starts
inside the interval. total(ts) must be the record at exactly cycle ts
(zero when absent): records are suppressed precisely when nothing is
active, so carrying an older record forward would overcount.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import keys
from .domain import TimeInterval
from .storage import KVBackend, as_text


@dataclass(frozen=True)
class ICR:
    """Intermediate count result for one partition at one cycle."""

    pid: keys.Pid
    t: int
    total: int
    new: int

    def __post_init__(self) -> None:
        if not 0 <= self.new <= self.total:
            raise ValueError(f"bad counts total={self.total} new={self.new}")

    def value(self) -> str:
        return f"{self.total}|{self.new}|{self.t}"


def parse_icr_value(pid: keys.Pid, value) -> ICR:
    total, new, t = as_text(value).split("|")
    return ICR(pid=pid, t=int(t), total=int(total), new=int(new))


@dataclass(frozen=True)
class ActiveEvent:
    """The per-unit live-event bookkeeping entry the emitter consumes.

    An event's partition is fixed by its position at the start cycle and
    never migrates, so totals and news stay consistent over its life.
    """

    eid: str
    oid: str
    stime: int
    pid: keys.Pid


def emit_icrs(active: Iterable[ActiveEvent], t: int) -> list[ICR]:
    """Count records for one cycle, one per partition with activity."""
    totals: dict[keys.Pid, int] = {}
    news: dict[keys.Pid, int] = {}
    for ev in active:
        totals[ev.pid] = totals.get(ev.pid, 0) + 1
        if ev.stime == t:
            news[ev.pid] = news.get(ev.pid, 0) + 1
    return [
        ICR(pid=pid, t=t, total=total, new=news.get(pid, 0))
        for pid, total in totals.items()
    ]


def store_icrs(store: KVBackend, icrs: Sequence[ICR]) -> None:
    store.append_many(
        (keys.icr_key(icr.pid[0], icr.pid[1]), icr.value()) for icr in icrs
    )


def count_partition(entries: Sequence[tuple[int, int, int]], interval: TimeInterval,
                    watermark: int | None = None) -> int:
    """Merge one partition's (t, total, new) records over the interval.

    ``entries`` must be ascending in t (they are appended per cycle).
    """
    te = interval.te if watermark is None else min(interval.te, watermark)
    if te < interval.ts:
        return 0
    ts_i = bisect_left(entries, (interval.ts,))
    count = 0
    if ts_i < len(entries) and entries[ts_i][0] == interval.ts:
        count += entries[ts_i][1]
        ts_i += 1
    for i in range(ts_i, bisect_right(entries, (te, float("inf"), float("inf")))):
        count += entries[i][2]
    return count


def load_partition_entries(store: KVBackend, pid: keys.Pid) -> list[tuple[int, int, int]]:
    return _parse_list(store.get_list(keys.icr_key(pid[0], pid[1])))


def pcag_count(
    store: KVBackend,
    pids: Iterable[keys.Pid] | None,
    interval: TimeInterval,
    watermark: int | None = None,
) -> int:
    """Total event count over the given partitions (all of them when None).

    With pids supplied this reads only those count lists; without, one
    prefix scan covers every partition that ever held activity. The final
    merge is a single reduction over per-partition partial counts.
    """
    if pids is None:
        partials = (
            count_partition(_parse_list(values), interval, watermark)
            for _, values in store.scan_prefix(keys.icr_prefix())
        )
    else:
        partials = (
            count_partition(load_partition_entries(store, pid), interval, watermark)
            for pid in pids
        )
    return sum(partials)


def _parse_list(values) -> list[tuple[int, int, int]]:
    """Decode one partition's records, dropping exact duplicates: a
    retried batch write may append the same record twice on backends
    without all-or-nothing batches."""
    out: list[tuple[int, int, int]] = []
    for value in values:
        total, new, t = as_text(value).split("|")
        entry = (int(t), int(total), int(new))
        if out and out[-1] == entry:
            continue
        out.append(entry)
    return out
