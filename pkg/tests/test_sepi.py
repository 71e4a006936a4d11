import random

from hypothesis import given, settings
from hypothesis import strategies as st

from aserv.domain import Eset, TimeInterval
from aserv.sepi import EpiIndex, SepiIndex
from aserv.storage import MemoryBackend

from conftest import esets_of, random_schedule, replay_indexes


def _single_run(store=None):
    """One event: oid flagged on cycles 3..5 of a 7-cycle stream."""
    store = store or MemoryBackend()
    index = SepiIndex(store, "u0")
    active = {}
    for t in range(1, 8):
        oids = ("obj",) if 3 <= t <= 5 else ()
        active = index.update(Eset(t, oids), active, t)
    return store, index


def test_one_pair_per_event():
    store, index = _single_run()
    assert index.entry_count() == 1
    assert store.get("sepi:u0:obj|000003") == "5"


def test_live_value_advances_while_flagged():
    store = MemoryBackend()
    index = SepiIndex(store, "u0")
    active = index.update(Eset(3, ("obj",)), {}, 3)
    assert store.get("sepi:u0:obj|000003") == "3"
    assert active == {"obj": "obj|3"}
    active = index.update(Eset(4, ("obj",)), active, 4)
    assert store.get("sepi:u0:obj|000003") == "4"
    assert index.entry_count() == 1


def test_absence_closes_implicitly():
    _, index = _single_run()
    events = index.query(TimeInterval(1, 100))
    assert {(e.oid, e.stime, e.etime) for e in events} == {("obj", 3, 5)}


def test_query_interval_relations():
    _, index = _single_run()
    hit = lambda ts, te: len(index.query(TimeInterval(ts, te)))
    assert hit(4, 4) == 1   # nested inside the event
    assert hit(1, 3) == 1   # touches the start
    assert hit(5, 9) == 1   # touches the end
    assert hit(1, 9) == 1   # contains the event
    assert hit(1, 2) == 0   # ends before
    assert hit(6, 9) == 0   # starts after


def test_query_is_one_scan_no_dedup():
    _, index = _single_run()
    index.query(TimeInterval(1, 9))
    assert index.last_query_stats.scans == 1
    assert index.last_query_stats.dedup_passes == 0


def test_epi_query_is_two_scans_one_dedup():
    store = MemoryBackend()
    index = EpiIndex(store, "u0")
    active = {}
    for t in range(1, 8):
        oids = ("obj",) if 3 <= t <= 5 else ()
        active = index.update(Eset(t, oids), active, t)
    assert index.entry_count() == 2
    assert {(e.oid, e.stime, e.etime) for e in index.query(TimeInterval(4, 4))} == {
        ("obj", 3, 5)
    }
    assert index.last_query_stats.scans == 2
    assert index.last_query_stats.dedup_passes == 1


def test_reopened_object_gets_fresh_event():
    store = MemoryBackend()
    index = SepiIndex(store, "u0")
    active = {}
    flagged = {1: ("obj",), 2: ("obj",), 5: ("obj",)}
    for t in range(1, 7):
        active = index.update(Eset(t, flagged.get(t, ())), active, t)
    events = index.query(TimeInterval(1, 10))
    assert {(e.stime, e.etime) for e in events} == {(1, 2), (5, 5)}
    assert index.entry_count() == 2


def test_update_is_idempotent_for_retries():
    store = MemoryBackend()
    index = SepiIndex(store, "u0")
    active = index.update(Eset(3, ("obj",)), {}, 3)
    again = index.update(Eset(3, ("obj",)), {}, 3)
    assert again == active
    assert index.entry_count() == 1
    assert store.get("sepi:u0:obj|000003") == "3"


def test_units_are_isolated():
    store = MemoryBackend()
    a, b = SepiIndex(store, "u1"), SepiIndex(store, "u10")
    a.update(Eset(1, ("x",)), {}, 1)
    b.update(Eset(1, ("y",)), {}, 1)
    assert {e.oid for e in a.query(TimeInterval(1, 1))} == {"x"}
    assert {e.oid for e in b.query(TimeInterval(1, 1))} == {"y"}


def test_lookup_resolves_and_clamps():
    _, index = _single_run()
    ev = index.lookup("obj|3")
    assert (ev.oid, ev.stime, ev.etime) == ("obj", 3, 5)
    assert index.lookup("obj|4") is None
    clamped = index.lookup("obj|3", watermark=4)
    assert clamped.etime == 4
    assert index.lookup("obj|3", watermark=2) is None


def test_watermark_hides_and_clamps():
    store = MemoryBackend()
    index = SepiIndex(store, "u0")
    active = {}
    # event A on 2..6, event B starting at 5
    flagged = {t: set() for t in range(1, 7)}
    for t in range(2, 7):
        flagged[t].add("a")
    for t in range(5, 7):
        flagged[t].add("b")
    for t in range(1, 7):
        active = index.update(Eset(t, frozenset(flagged[t])), active, t)

    seen = index.query(TimeInterval(1, 10), watermark=4)
    assert {(e.oid, e.etime) for e in seen} == {("a", 4)}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_both_indexes_match_brute_force(seed):
    rng = random.Random(seed)
    cycles = rng.randint(5, 40)
    truth = random_schedule(rng, oids=rng.randint(1, 12), cycles=cycles)
    store = MemoryBackend()
    sepi, epi = replay_indexes(store, "u0", truth, cycles, epi=True)

    assert sepi.entry_count() == len(truth)
    assert epi.entry_count() == 2 * len(truth)

    for _ in range(40):
        ts = rng.randint(1, cycles)
        te = rng.randint(ts, cycles)
        interval = TimeInterval(ts, te)
        wm = rng.choice([None, rng.randint(1, cycles)])

        expect = set()
        for e in truth.intersecting(interval, wm):
            etime = e.etime if wm is None else min(e.etime, wm)
            expect.add((e.oid, e.stime, etime))

        got_sepi = {(e.oid, e.stime, e.etime) for e in sepi.query(interval, wm)}
        got_epi = {(e.oid, e.stime, e.etime) for e in epi.query(interval, wm)}
        assert got_sepi == expect
        assert got_epi == expect


def test_watermark_query_equals_frozen_replay():
    rng = random.Random(7)
    cycles, wm = 30, 17
    truth = random_schedule(rng, oids=10, cycles=cycles)

    live = replay_indexes(MemoryBackend(), "u0", truth, cycles)

    frozen_store = MemoryBackend()
    frozen = SepiIndex(frozen_store, "u0")
    active = {}
    for eset in esets_of(truth, wm):
        active = frozen.update(eset, active, eset.t)

    for ts in range(1, cycles + 1, 3):
        interval = TimeInterval(ts, min(ts + 5, cycles))
        assert live.query(interval, watermark=wm) == frozen.query(interval)
