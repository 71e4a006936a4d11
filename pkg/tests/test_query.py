import random

import pytest

from aserv.datagen import GenConfig, UnitGenerator
from aserv.domain import Region, TimeInterval
from aserv.epgrid import PartitionGrid
from aserv.ingest import UnitWorker
from aserv.query import (AccuracyResult, IntegrityError, QueryEngine,
                         UnknownEventError)
from aserv.storage import MemoryBackend

DISK = Region(0.5, 0.5, 0.45)


def _engine_of(sim):
    return sim.query_engine()


def test_probe_counts_interval_events(demo_sim):
    engine = _engine_of(demo_sim)
    assert engine.probe(None, TimeInterval(4, 7)) == 3
    assert engine.probe(None, TimeInterval(1, 2)) == 0
    assert engine.probe(DISK, TimeInterval(4, 7)) == 3
    # cell (3, 0) holds an object but no events
    assert engine.probe(Region(0.9, 0.1, 0.01), TimeInterval(4, 7)) == 0
    # oid1 shares cell (0, 0) with this disk, so the partition count sees it
    assert engine.probe(Region(0.1, 0.1, 0.01), TimeInterval(4, 7)) == 1


def test_probe_disjoint_region_is_zero_without_reads(demo_sim):
    engine = _engine_of(demo_sim)
    assert engine.probe(Region(40.0, 40.0, 1.0), TimeInterval(1, 10)) == 0


def test_list_returns_full_series_sorted(demo_sim):
    series = _engine_of(demo_sim).list_events(None, TimeInterval(4, 7))
    assert [s.event.eid for s in series] == ["oid1|3", "oid2|4", "oid3|5"]
    assert [len(s.rows) for s in series] == [3, 1, 2]
    # full series even though [4,7] only clips the first event's tail
    assert [r.t for r in series[0].rows] == [3, 4, 5]
    # full-fidelity rows: all four demo attributes survive
    assert all(len(r.d) == 4 for s in series for r in s.rows)


def test_list_filters_by_event_partition(demo_sim):
    engine = _engine_of(demo_sim)
    # a disk tight around oid2's position touches only its partition
    series = engine.list_events(Region(0.68, 0.31, 0.02), TimeInterval(1, 10))
    assert [s.event.eid for s in series] == ["oid2|4"]
    assert series[0].pid == ("u0", 6)


def test_stretch_extends_and_clips(demo_sim):
    engine = _engine_of(demo_sim)
    out = engine.stretch("oid3|5", 1, 1)
    assert (out.oid, out.ts, out.te) == ("oid3", 4, 7)
    assert [r.t for r in out.rows] == [4, 5, 6, 7]
    # reduced rows only: the single kept attribute
    assert all(len(r.d) == 1 for r in out.rows)

    wide = engine.stretch("oid3|5", 100, 100)
    assert (wide.ts, wide.te) == (0, 10)  # capped at the watermark
    assert [r.t for r in wide.rows] == list(range(1, 11))


def test_stretch_zero_margins_projects_event(demo_sim):
    out = _engine_of(demo_sim).stretch("oid1|3", 0, 0)
    assert (out.ts, out.te) == (3, 5)
    assert [r.t for r in out.rows] == [3, 4, 5]
    assert all(r.oid == "oid1" for r in out.rows)


def test_stretch_validates_arguments(demo_sim):
    engine = _engine_of(demo_sim)
    with pytest.raises(ValueError):
        engine.stretch("oid1|3", -1, 0)
    with pytest.raises(UnknownEventError):
        engine.stretch("nobody|7", 1, 1)
    assert issubclass(UnknownEventError, KeyError)


def test_accuracy_on_demo(demo_sim):
    res = _engine_of(demo_sim).accuracy(DISK, TimeInterval(4, 7))
    assert (res.probe, res.pcse) == (3, 3)
    assert res.accuracy == 1.0


def test_accuracy_empty_probe_is_perfect():
    assert AccuracyResult(probe=0, pcse=0).accuracy == 1.0


def test_integrity_error_when_index_has_no_rows():
    store = MemoryBackend()
    store.put("sepi:u0:x|000003", "4")
    grid = PartitionGrid("u0", (0.0, 0.0), 1.0, 2, 2)
    engine = QueryEngine(store, {"u0": grid}, 10)
    with pytest.raises(IntegrityError):
        engine.list_events(None, TimeInterval(1, 10))


def test_duplicate_batches_are_invisible(demo_sim):
    engine = _engine_of(demo_sim)
    store = demo_sim.store
    before_series = engine.list_events(None, TimeInterval(1, 10))
    before_stretch = engine.stretch("oid3|5", 1, 1)

    # simulate a resubmitted cycle: re-append the adjacent identical items
    for key in ("ev:oid3|5", "part:u0:13"):
        items = store.get_list(key)
        store.append(key, items[-1])

    assert engine.list_events(None, TimeInterval(1, 10)) == before_series
    assert engine.stretch("oid3|5", 1, 1) == before_stretch


def _staged(seed=0, cycles=25, objects=60):
    cfg = GenConfig(units=1, objects_per_unit=objects, cycles=cycles,
                    p=0.5, dmax=4, m=6, seed=seed)
    gen = UnitGenerator(cfg, 0)
    grid = PartitionGrid("u0", (0.0, 0.0), 1.0, 3, 3)
    store = MemoryBackend()
    worker = UnitWorker("u0", grid, store)
    for t in range(1, cycles + 1):
        worker.process_cycle(gen.cycle(t))
    return gen, QueryEngine(store, {"u0": grid}, cycles)


def test_interval_queries_match_generated_truth():
    gen, engine = _staged()
    cycles = gen.config.cycles
    rng = random.Random(5)
    for _ in range(60):
        ts = rng.randint(1, cycles)
        interval = TimeInterval(ts, rng.randint(ts, cycles))
        expect = {
            (e.oid, e.stime, min(e.etime, cycles))
            for e in gen.truth.intersecting(interval, cycles)
        }
        got = {(e.oid, e.stime, e.etime) for e in engine.events_in(interval)}
        assert got == expect
        assert engine.probe(None, interval) == len(expect)


def test_probe_bounds_exact_count():
    gen, engine = _staged(seed=8)
    cycles = gen.config.cycles
    rng = random.Random(9)
    for _ in range(40):
        reg = Region(rng.random(), rng.random(), 0.05 + rng.random() * 0.3)
        ts = rng.randint(1, cycles)
        interval = TimeInterval(ts, rng.randint(ts, cycles))
        probe = engine.probe(reg, interval)
        pcse = engine.pcse_count(reg, interval)
        assert probe >= pcse
        assert pcse == gen.truth.count_in_disk(reg, interval, cycles)
        assert 0.0 <= AccuracyResult(probe, pcse).accuracy <= 1.0


def test_watermark_sources():
    gen, _ = _staged(seed=2, cycles=8)
    grid = PartitionGrid("u0", (0.0, 0.0), 1.0, 3, 3)
    store = MemoryBackend()
    worker = UnitWorker("u0", grid, store)
    g2 = UnitGenerator(gen.config, 0)
    for t in range(1, 9):
        worker.process_cycle(g2.cycle(t))

    fixed = QueryEngine(store, {"u0": grid}, 5)
    assert fixed.watermark() == 5
    live = QueryEngine(store, {"u0": grid}, lambda: worker.committed_t)
    assert live.watermark() == 8
    unbounded = QueryEngine(store, {"u0": grid})
    assert unbounded.watermark() is None

    full = TimeInterval(1, 8)
    assert fixed.probe(None, full) == len(
        gen.truth.intersecting(full, 5))
    assert unbounded.probe(None, full) >= fixed.probe(None, full)
