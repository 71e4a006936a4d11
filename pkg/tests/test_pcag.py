import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aserv.domain import TimeInterval
from aserv.epgrid import PartitionGrid, partition_of
from aserv.pcag import (ICR, ActiveEvent, count_partition, emit_icrs,
                        load_partition_entries, parse_icr_value, pcag_count,
                        store_icrs)
from aserv.storage import MemoryBackend

from conftest import random_schedule, replay_icrs

GRID1 = PartitionGrid("u0", (0.0, 0.0), 1.0, 1, 1)
PID = ("u0", 0)


def _active(*stimes, t):
    return [
        ActiveEvent(f"o{i}|{s}", f"o{i}", s, PID)
        for i, s in enumerate(stimes)
        if s <= t
    ]


def test_icr_value_layout():
    icr = ICR(PID, t=7, total=3, new=1)
    assert icr.value() == "3|1|7"
    assert parse_icr_value(PID, "3|1|7") == icr


def test_icr_rejects_inconsistent_counts():
    with pytest.raises(ValueError):
        ICR(PID, t=1, total=1, new=2)
    with pytest.raises(ValueError):
        ICR(PID, t=1, total=-1, new=0)


def test_emit_counts_active_and_new():
    # three events active at t=5, one of them started this cycle
    icrs = emit_icrs(_active(3, 4, 5, t=5), t=5)
    assert len(icrs) == 1
    assert (icrs[0].total, icrs[0].new, icrs[0].t) == (3, 1, 5)


def test_emit_is_zero_suppressed():
    assert emit_icrs([], t=5) == []


def test_emit_groups_by_partition():
    events = [
        ActiveEvent("a|2", "a", 2, ("u0", 0)),
        ActiveEvent("b|5", "b", 5, ("u0", 1)),
        ActiveEvent("c|5", "c", 5, ("u0", 1)),
    ]
    by_pid = {icr.pid: icr for icr in emit_icrs(events, t=5)}
    assert by_pid[("u0", 0)].total == 1 and by_pid[("u0", 0)].new == 0
    assert by_pid[("u0", 1)].total == 2 and by_pid[("u0", 1)].new == 2


def test_count_total_at_ts_plus_new_after():
    # events: [2,4], [3,3], [5,6] -> records t2:(1,1) t3:(2,1) t4:(1,0) t5:(1,1) t6:(1,0)
    entries = [(2, 1, 1), (3, 2, 1), (4, 1, 0), (5, 1, 1), (6, 1, 0)]
    assert count_partition(entries, TimeInterval(3, 5)) == 3
    assert count_partition(entries, TimeInterval(2, 6)) == 3
    assert count_partition(entries, TimeInterval(4, 4)) == 1
    assert count_partition(entries, TimeInterval(7, 9)) == 0


def test_count_missing_ts_record_reads_zero():
    # nothing active at ts=1; the t=5 start must come from new, not total
    entries = [(5, 1, 1), (6, 1, 0)]
    assert count_partition(entries, TimeInterval(1, 6)) == 1
    # quiet gap: record exists before ts but none at ts
    entries = [(2, 1, 1), (5, 1, 1)]
    assert count_partition(entries, TimeInterval(3, 4)) == 0


def test_count_clamps_to_watermark():
    entries = [(2, 1, 1), (3, 2, 1), (4, 2, 0)]
    assert count_partition(entries, TimeInterval(2, 9), watermark=2) == 1
    assert count_partition(entries, TimeInterval(2, 9), watermark=3) == 2
    assert count_partition(entries, TimeInterval(5, 9), watermark=3) == 0


def test_store_round_trip_and_duplicate_tolerance():
    store = MemoryBackend()
    icrs = [ICR(PID, t=2, total=1, new=1)]
    store_icrs(store, icrs)
    store_icrs(store, icrs)  # retried batch
    store_icrs(store, [ICR(PID, t=3, total=2, new=1)])
    assert load_partition_entries(store, PID) == [(2, 1, 1), (3, 2, 1)]


def test_pcag_count_scans_all_when_pids_unknown():
    store = MemoryBackend()
    store_icrs(store, [ICR(("u0", 0), 1, 1, 1), ICR(("u0", 3), 1, 1, 1)])
    store_icrs(store, [ICR(("u1", 2), 2, 2, 2)])
    assert pcag_count(store, None, TimeInterval(1, 2)) == 4
    assert pcag_count(store, [("u0", 0)], TimeInterval(1, 2)) == 1
    assert pcag_count(store, [("u1", 2)], TimeInterval(1, 2)) == 2
    assert pcag_count(store, [("u0", 5)], TimeInterval(1, 2)) == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_counts_exact_against_truth(seed):
    rng = random.Random(seed)
    cycles = rng.randint(5, 40)
    truth = random_schedule(rng, oids=rng.randint(1, 15), cycles=cycles)
    grid = PartitionGrid("u0", (0.0, 0.0), 1.0, 4, 4)
    store = MemoryBackend()
    replay_icrs(store, grid, truth, cycles)

    for _ in range(40):
        ts = rng.randint(1, cycles)
        te = rng.randint(ts, cycles)
        interval = TimeInterval(ts, te)
        wm = rng.choice([None, rng.randint(1, cycles)])
        expect = truth.count_intersecting(interval, wm)
        assert pcag_count(store, None, interval, wm) == expect

        # restricted to one partition: only events homed there count
        pid = ("u0", rng.randrange(16))
        expect_pid = sum(
            1 for e in truth.intersecting(interval, wm)
            if partition_of(grid, e.x, e.y) == pid
        )
        assert pcag_count(store, [pid], interval, wm) == expect_pid


def test_partition_fixed_at_start_keeps_counts_consistent():
    # the emitter is fed the start-cycle partition every cycle, so a
    # wandering object cannot split one event across partitions
    store = MemoryBackend()
    for t in (3, 4, 5):
        store_icrs(store, emit_icrs(
            [ActiveEvent("o|3", "o", 3, ("u0", 7))], t))
    assert pcag_count(store, [("u0", 7)], TimeInterval(1, 9)) == 1
    assert pcag_count(store, [("u0", 8)], TimeInterval(1, 9)) == 0
