"""Simulated observation source.

One generator per unit emits, per cycle, a catalog of all objects plus
the set of flagged object ids, and keeps the ground-truth event table
so oracles can check query answers exactly. New events per cycle follow
a geometric distribution with support {0, 1, ...}; durations are uniform
integers in [dmin, dmax]; object positions are fixed uniform draws.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import CatalogTuple, Eset, Region, TimeInterval, contains, intersects
from .ingest import CycleBatch


@dataclass(frozen=True)
class GenConfig:
    units: int = 2
    objects_per_unit: int = 10_000
    cycles: int = 200
    side: float = 1.0
    ct: float = 1.0
    p: float = 0.5
    dmin: int = 1
    dmax: int = 5
    m: int = 21
    seed: int = 0

    def __post_init__(self) -> None:
        if self.units < 1 or self.objects_per_unit < 1 or self.cycles < 0:
            raise ValueError("units and objects_per_unit must be >= 1, cycles >= 0")
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if self.dmin < 1 or self.dmax < self.dmin:
            raise ValueError(f"need 1 <= dmin <= dmax, got [{self.dmin}, {self.dmax}]")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.side <= 0 or self.ct < 0:
            raise ValueError("side must be > 0 and ct >= 0")

    @property
    def area(self) -> float:
        return self.side * self.side

    def with_event_target(self, total_events: int) -> "GenConfig":
        """Calibrate p so the expected event total over the run is hit.

        Mean new events per cycle per unit for the geometric law is
        (1-p)/p, so p = 1 / (1 + target / (cycles * units)).
        """
        if total_events < 0 or self.cycles < 1:
            raise ValueError("need total_events >= 0 and cycles >= 1")
        mean = total_events / (self.cycles * self.units)
        return replace(self, p=1.0 / (1.0 + mean))


def gwac_profile() -> GenConfig:
    """Survey-night scale: one unit, 175,600 objects, 15 s cycles,
    1,920 cycles, p calibrated for ~200,000 events."""
    base = GenConfig(units=1, objects_per_unit=175_600, cycles=1_920,
                     side=1.0, ct=15.0, dmin=1, dmax=8, m=21, seed=0)
    return base.with_event_target(200_000)


@dataclass(frozen=True)
class TruthEvent:
    oid: str
    stime: int
    etime: int
    x: float
    y: float

    def interval(self) -> TimeInterval:
        return TimeInterval(self.stime, self.etime)


class GroundTruth:
    """Complete table of generated events, the oracle side of every
    index and count query."""

    def __init__(self, events: Sequence[TruthEvent] = ()):
        self.events: list[TruthEvent] = list(events)

    def add(self, event: TruthEvent) -> None:
        self.events.append(event)

    def extend(self, other: "GroundTruth") -> None:
        self.events.extend(other.events)

    def __len__(self) -> int:
        return len(self.events)

    def eset_oids(self, t: int) -> set[str]:
        return {e.oid for e in self.events if e.stime <= t <= e.etime}

    def intersecting(self, interval: TimeInterval,
                     watermark: int | None = None) -> list[TruthEvent]:
        out = []
        for e in self.events:
            if watermark is not None and e.stime > watermark:
                continue
            etime = e.etime if watermark is None else min(e.etime, watermark)
            if intersects(TimeInterval(e.stime, etime), interval):
                out.append(e)
        return out

    def count_intersecting(self, interval: TimeInterval,
                           watermark: int | None = None) -> int:
        return len(self.intersecting(interval, watermark))

    def count_in_disk(self, reg: Region, interval: TimeInterval,
                      watermark: int | None = None) -> int:
        return sum(1 for e in self.intersecting(interval, watermark)
                   if contains(reg, e.x, e.y))

    def export(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"{e.oid}\t{e.stime}\t{e.etime}\t{e.x:.6f}\t{e.y:.6f}"
                 for e in self.events]
        path.write_text("\n".join(lines) + ("\n" if lines else ""))
        return path

    @classmethod
    def load(cls, path: str | Path) -> "GroundTruth":
        truth = cls()
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            oid, stime, etime, x, y = line.split("\t")
            truth.add(TruthEvent(oid, int(stime), int(etime), float(x), float(y)))
        return truth


def _unit_entropy(unit_id: str) -> int:
    return int.from_bytes(hashlib.sha256(unit_id.encode()).digest()[:8], "big")


def load_positions(path: str | Path, n: int, side: float) -> np.ndarray:
    """Position-file hook: one "x,y" pair per line, coordinates relative
    to the unit's sub-area, at least n rows."""
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        xs, ys = line.replace("\t", ",").split(",")[:2]
        rows.append((float(xs), float(ys)))
    if len(rows) < n:
        raise ValueError(f"position file has {len(rows)} rows, need {n}")
    pos = np.asarray(rows[:n], dtype=float)
    if pos.min() < 0 or pos.max() >= side:
        raise ValueError("positions must lie in [0, side) x [0, side)")
    return pos


class UnitGenerator:
    """Deterministic per-unit stream: same (seed, unit id) gives
    byte-exact identical cycles."""

    def __init__(self, config: GenConfig, index: int,
                 unit_id: str | None = None,
                 positions: np.ndarray | None = None):
        if not 0 <= index < config.units:
            raise ValueError(f"unit index {index} out of range")
        self.config = config
        self.unit_id = unit_id or f"u{index}"
        self.origin = (index * config.side, 0.0)
        self._rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, _unit_entropy(self.unit_id)]))
        n = config.objects_per_unit
        if positions is None:
            rel = self._rng.random((n, 2)) * config.side
        else:
            rel = np.asarray(positions, dtype=float)[:n]
        self._x = self.origin[0] + rel[:, 0]
        self._y = self.origin[1] + rel[:, 1]
        self.oids = [f"{self.unit_id}-{i:05d}" for i in range(n)]
        self._attr_base = self._rng.normal(12.0, 1.0, size=(n, config.m))
        self._busy = np.full(n, -2, dtype=np.int64)
        self._active: dict[int, int] = {}
        self._next_t = 1
        self.truth = GroundTruth()

    def object_position(self, i: int) -> tuple[float, float]:
        return float(self._x[i]), float(self._y[i])

    def _start_events(self, t: int) -> None:
        cfg = self.config
        count = int(self._rng.geometric(cfg.p)) - 1
        if count == 0:
            return
        # keep ground-truth runs contiguous: an object active at t-1 or t
        # cannot start a second event now
        eligible = np.flatnonzero(self._busy <= t - 2)
        count = min(count, eligible.size)
        if count == 0:
            return
        picks = self._rng.choice(eligible, size=count, replace=False)
        durations = self._rng.integers(cfg.dmin, cfg.dmax + 1, size=count)
        for obj, dur in zip(picks.tolist(), durations.tolist()):
            etime = t + int(dur) - 1
            self._busy[obj] = etime
            self._active[obj] = etime
            self.truth.add(TruthEvent(self.oids[obj], t, etime,
                                      float(self._x[obj]), float(self._y[obj])))

    def cycle(self, t: int) -> CycleBatch:
        if t != self._next_t:
            raise ValueError(f"expected cycle {self._next_t}, got {t}")
        self._next_t += 1
        self._active = {obj: e for obj, e in self._active.items() if e >= t}
        self._start_events(t)
        cfg = self.config
        d = self._attr_base + 0.02 * self._rng.standard_normal(
            (cfg.objects_per_unit, cfg.m))
        rows = d.tolist()
        catalog = [
            CatalogTuple(self.oids[i], float(self._x[i]), float(self._y[i]),
                         t, tuple(rows[i]))
            for i in range(cfg.objects_per_unit)
        ]
        eset = Eset(t, frozenset(self.oids[obj] for obj in self._active))
        return CycleBatch(self.unit_id, t, catalog, eset)


class ScheduleSource:
    """Scripted stream: fixed objects and a hand-written event schedule.

    Events of the same object must be separated by at least one quiet
    cycle so every scheduled event stays one contiguous flagged run.
    """

    def __init__(self, unit_id: str,
                 objects: Sequence[tuple[str, float, float]],
                 events: Sequence[tuple[str, int, int]],
                 cycles: int, m: int = 4, seed: int = 0):
        self.unit_id = unit_id
        self.cycles = cycles
        self._objects = list(objects)
        self._pos = {oid: (x, y) for oid, x, y in objects}
        per_oid: dict[str, list[tuple[int, int]]] = {}
        for oid, stime, etime in events:
            if oid not in self._pos:
                raise ValueError(f"event references unknown object {oid}")
            if not 1 <= stime <= etime:
                raise ValueError(f"bad event span [{stime}, {etime}]")
            per_oid.setdefault(oid, []).append((stime, etime))
        for oid, spans in per_oid.items():
            spans.sort()
            for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
                if s2 <= e1 + 1:
                    raise ValueError(
                        f"events of {oid} touch: [{s1},{e1}] and [{s2},{e2}]")
        self.truth = GroundTruth(
            TruthEvent(oid, s, e, *self._pos[oid]) for oid, s, e in events)
        self._rng = np.random.default_rng(
            np.random.SeedSequence([seed, _unit_entropy(unit_id)]))
        self._attr_base = self._rng.normal(12.0, 1.0, size=(len(objects), m))
        self._m = m
        self._next_t = 1

    def cycle(self, t: int) -> CycleBatch:
        if t != self._next_t:
            raise ValueError(f"expected cycle {self._next_t}, got {t}")
        self._next_t += 1
        d = self._attr_base + 0.02 * self._rng.standard_normal(
            (len(self._objects), self._m))
        rows = d.tolist()
        catalog = [
            CatalogTuple(oid, x, y, t, tuple(rows[i]))
            for i, (oid, x, y) in enumerate(self._objects)
        ]
        eset = Eset(t, frozenset(self.truth.eset_oids(t)))
        return CycleBatch(self.unit_id, t, catalog, eset)


def emit_files(batch: CycleBatch, root: str | Path) -> tuple[Path, Path]:
    """Write <unit>/<t>.cat and <unit>/<t>.eset under root."""
    from .rows import format_catalog_row

    unit_dir = Path(root) / batch.unit_id
    unit_dir.mkdir(parents=True, exist_ok=True)
    cat_path = unit_dir / f"{batch.t}.cat"
    cat_path.write_text(
        "".join(format_catalog_row(r) + "\n" for r in batch.catalog))
    eset_path = unit_dir / f"{batch.t}.eset"
    lines = [str(batch.t)]
    lines.extend(sorted(batch.eset.oids))
    eset_path.write_text("\n".join(lines) + "\n")
    return cat_path, eset_path


class DirSource:
    """Replays a generated directory as a cycle source."""

    def __init__(self, root: str | Path, unit_id: str):
        self.root = Path(root)
        self.unit_id = unit_id
        ts = sorted(int(p.stem) for p in (self.root / unit_id).glob("*.cat"))
        if ts != list(range(1, len(ts) + 1)):
            raise ValueError(f"unit {unit_id}: cycle files are not 1..n")
        self.cycles = len(ts)
        truth_path = self.root / unit_id / "truth.tsv"
        self.truth = (GroundTruth.load(truth_path) if truth_path.exists()
                      else GroundTruth())

    def cycle(self, t: int) -> CycleBatch:
        return read_cycle_files(self.root, self.unit_id, t)


def read_cycle_files(root: str | Path, unit_id: str, t: int) -> CycleBatch:
    from .rows import parse_catalog_row

    unit_dir = Path(root) / unit_id
    cat_lines = (unit_dir / f"{t}.cat").read_text().splitlines()
    catalog = [parse_catalog_row(line) for line in cat_lines if line]
    eset_lines = (unit_dir / f"{t}.eset").read_text().splitlines()
    header = int(eset_lines[0])
    if header != t:
        raise ValueError(f"eset header {header} does not match cycle {t}")
    oids = frozenset(line for line in eset_lines[1:] if line)
    return CycleBatch(unit_id, t, catalog, Eset(t, oids))
