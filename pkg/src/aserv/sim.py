"""Simulation runner: wires generators, per-unit workers, and the master
into one controllable run.

``run()`` drives every cycle as fast as possible (test and batch mode).
``start()`` runs the same loop on a background thread with optional
pacing (rate r means one cycle per ct/r wall seconds) and accepts
pause/resume/rate steering, which is what the HTTP API exposes.
"""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from .config import Config
from .datagen import GroundTruth, UnitGenerator, load_positions
from .epgrid import PartitionGrid, build_grid, persist_metadata
from .ingest import IngestStats, Master, UnitStalled, UnitWorker
from .query import QueryEngine
from .rows import format_catalog_row
from .storage import KVBackend, MemoryBackend

log = logging.getLogger(__name__)


class ControlError(Exception):
    """Steering command against a simulation that is not running."""


def build_store(config: Config) -> KVBackend:
    if config.backend == "resp":
        from .resp import RespBackend

        return RespBackend(config.resp_host, config.resp_port)
    return MemoryBackend()


def build_grids(config: Config,
                unit_ids: Sequence[str]) -> dict[str, PartitionGrid]:
    s = config.side * config.side
    r_min = config.resolved_r_min()
    return {
        unit_id: build_grid(unit_id, (i * config.side, 0.0), s,
                            config.alpha, r_min, config.partitions)
        for i, unit_id in enumerate(unit_ids)
    }


class Simulation:
    """One night: sources feed workers cycle by cycle, the master commits.

    ``sources`` defaults to one deterministic generator per unit; scripted
    sources (same duck type: unit_id, cycle(t), truth) slot in for demos
    and tests. With ``track_raw_bytes`` the full catalog text size is
    accumulated per cycle, outside the measured ingest latency.
    """

    def __init__(self, config: Config, store: KVBackend | None = None,
                 sources: Sequence | None = None, cycles: int | None = None,
                 track_raw_bytes: bool = False):
        self.config = config
        for note in config.warnings():
            log.warning("%s", note)
        self.store = store if store is not None else build_store(config)
        if sources is None:
            gen = config.gen_config()
            positions = None
            if config.position_file is not None:
                positions = load_positions(config.position_file,
                                           gen.objects_per_unit, gen.side)
            sources = [UnitGenerator(gen, i, positions=positions)
                       for i in range(config.units)]
        self.sources = list(sources)
        self.cycles = config.cycles if cycles is None else cycles
        self.track_raw_bytes = track_raw_bytes
        self.raw_bytes = 0

        self.grids = build_grids(config, [s.unit_id for s in self.sources])
        for grid in self.grids.values():
            persist_metadata(grid, self.store)
        self.master = Master()
        self.workers = {}
        for source in self.sources:
            unit = source.unit_id
            self.master.register(unit)
            self.workers[unit] = UnitWorker(
                unit, self.grids[unit], self.store, c=config.c,
                epi_enabled=config.epi_enabled, max_retries=config.max_retries)
        self.stats: list[IngestStats] = []
        self._next_t = 1
        self._rate = config.rate
        self._lock = threading.Lock()
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()
        self._gate = threading.Event()
        self._gate.set()
        self._finished = False
        self._stalled: UnitStalled | None = None
        self._pool = (ThreadPoolExecutor(max_workers=len(self.sources))
                      if len(self.sources) > 1 else None)

    @property
    def truth(self) -> GroundTruth:
        merged = GroundTruth()
        for source in self.sources:
            merged.extend(source.truth)
        return merged

    def query_engine(self) -> QueryEngine:
        return QueryEngine(self.store, self.grids,
                           lambda: self.master.watermark)

    def _ingest_one(self, source) -> IngestStats:
        batch = source.cycle(self._next_t)
        if self.track_raw_bytes:
            size = sum(len(format_catalog_row(r)) + 1 for r in batch.catalog)
            with self._lock:
                self.raw_bytes += size
        return self.workers[source.unit_id].process_cycle(batch)

    def step(self) -> list[IngestStats]:
        """Run cycle _next_t on every unit (parallel across units) and
        commit; raises UnitStalled if a unit exhausted its retries."""
        if self._next_t > self.cycles:
            raise ControlError("simulation already drained")
        if self._pool is not None:
            futures = [self._pool.submit(self._ingest_one, s) for s in self.sources]
            results = [f.result() for f in futures]
        else:
            results = [self._ingest_one(s) for s in self.sources]
        for stats in results:
            self.master.commit(stats.unit_id, stats)
        self.stats.extend(results)
        self._next_t += 1
        return results

    def run(self) -> None:
        """Drain every remaining cycle inline, no pacing."""
        while self._next_t <= self.cycles:
            self.step()
        self._finished = True

    # -- background-thread mode ------------------------------------------

    def start(self, paused: bool = False) -> None:
        if self._thread is not None:
            raise ControlError("simulation already started")
        if paused:
            self._gate.clear()
        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name="aserv-sim")
        self._thread.start()

    def _loop(self) -> None:
        try:
            while not self._stop.is_set() and self._next_t <= self.cycles:
                if not self._gate.is_set():
                    self._gate.wait(0.05)
                    continue
                began = time.monotonic()
                self.step()
                rate = self._rate
                if rate > 0:
                    gap = self.config.ct / rate - (time.monotonic() - began)
                    if gap > 0:
                        self._stop.wait(gap)
        except UnitStalled as exc:
            self._stalled = exc
            log.error("%s", exc)
        finally:
            self._finished = True

    @property
    def state(self) -> str:
        if self._stalled is not None:
            return "stalled"
        if self._thread is None:
            return "done" if self._finished else "idle"
        if self._thread.is_alive():
            return "paused" if not self._gate.is_set() else "running"
        return "done"

    def _require_live(self) -> None:
        if self._thread is None or not self._thread.is_alive():
            raise ControlError(f"simulation is {self.state}, not steerable")

    def pause(self) -> None:
        self._require_live()
        self._gate.clear()

    def resume(self) -> None:
        self._require_live()
        self._gate.set()

    def set_rate(self, rate: float) -> None:
        if rate < 0:
            raise ValueError("rate must be >= 0")
        self._require_live()
        self._rate = rate

    @property
    def rate(self) -> float:
        return self._rate

    def stop(self, timeout: float = 10.0) -> None:
        self._stop.set()
        self._gate.set()
        if self._thread is not None:
            self._thread.join(timeout)
        if self._pool is not None:
            self._pool.shutdown(wait=False)
        self.store.close()
