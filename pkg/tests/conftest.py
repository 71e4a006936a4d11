"""Shared helpers: random event schedules, index replay, and oracles."""

from __future__ import annotations

import random

import pytest

from aserv.datagen import GroundTruth, TruthEvent
from aserv.domain import Eset
from aserv.epgrid import PartitionGrid, partition_of
from aserv.fixtures import demo_simulation
from aserv.ingest import CycleBatch
from aserv.pcag import ActiveEvent, emit_icrs, store_icrs
from aserv.sepi import EpiIndex, SepiIndex
from aserv.storage import MemoryBackend


def random_schedule(rng: random.Random, oids: int, cycles: int,
                    start_prob: float = 0.15, dmax: int = 6,
                    side: float = 1.0) -> GroundTruth:
    """Independent per-object event runs with at least one quiet cycle
    between consecutive events, positions uniform in the sub-area."""
    truth = GroundTruth()
    for i in range(oids):
        oid = f"o{i:04d}"
        x, y = rng.random() * side, rng.random() * side
        t = 1
        while t <= cycles:
            if rng.random() < start_prob:
                etime = min(t + rng.randint(1, dmax) - 1, cycles)
                truth.add(TruthEvent(oid, t, etime, x, y))
                t = etime + 2
            else:
                t += 1
    return truth


def esets_of(truth: GroundTruth, cycles: int) -> list[Eset]:
    return [Eset(t, frozenset(truth.eset_oids(t))) for t in range(1, cycles + 1)]


def replay_indexes(store: MemoryBackend, unit: str, truth: GroundTruth,
                   cycles: int, epi: bool = False):
    """Feed the schedule's Esets through the index update path."""
    sepi = SepiIndex(store, unit)
    epi_index = EpiIndex(store, unit) if epi else None
    active: dict[str, str] = {}
    active_epi: dict[str, str] = {}
    for eset in esets_of(truth, cycles):
        new_active = sepi.update(eset, active, eset.t)
        if epi_index is not None:
            active_epi = epi_index.update(eset, active_epi, eset.t)
        active = new_active
    return (sepi, epi_index) if epi else sepi


def replay_icrs(store: MemoryBackend, grid: PartitionGrid,
                truth: GroundTruth, cycles: int) -> None:
    """Emit and store per-cycle count records for the schedule."""
    for t in range(1, cycles + 1):
        active = [
            ActiveEvent(f"{e.oid}|{e.stime}", e.oid, e.stime,
                        partition_of(grid, e.x, e.y))
            for e in truth.events if e.stime <= t <= e.etime
        ]
        store_icrs(store, emit_icrs(active, t))


def batch_of(unit: str, t: int, rows, flagged) -> CycleBatch:
    return CycleBatch(unit, t, rows, Eset(t, frozenset(flagged)))


@pytest.fixture()
def demo_sim():
    sim = demo_simulation(cycles=10)
    sim.run()
    return sim
