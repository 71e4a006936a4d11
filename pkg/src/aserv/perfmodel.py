"""Latency prediction for cluster sizing.

Scaling a query over K workers costs a parallel part (measured on one
node holding 1/K of the data) plus a scale overhead that grows linearly
with K: fo = theta1*K + theta2. The thetas are fitted from a handful of
small-cluster observations; the predicted query latency at K is then
parallel + theta1*K + theta2, and the predicted insertion latency is the
single-worker latency itself, checked against the cycle length.

Training file format, whitespace-delimited, '#' comments:
    workload kprime seconds
A kprime=1 row carries the measured single-node parallel time; rows with
kprime>1 carry the overhead observed at that cluster size.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

QUERY_WORKLOADS = ("probing", "listing", "stretching")
WORKLOADS = ("insert",) + QUERY_WORKLOADS


@dataclass(frozen=True)
class TrainingPoint:
    kprime: int
    fo: float

    def __post_init__(self) -> None:
        if self.kprime < 1:
            raise ValueError(f"kprime must be >= 1, got {self.kprime}")


@dataclass(frozen=True)
class LatencyModel:
    fp_fs: float
    fr_fq: float
    theta1: float
    theta2: float
    ct: float
    k: int

    def __post_init__(self) -> None:
        if self.fp_fs < 0 or self.fr_fq < 0 or self.ct < 0:
            raise ValueError("measured times must be >= 0")
        if self.k < 1:
            raise ValueError(f"cluster size must be >= 1, got {self.k}")


def fit_overhead(points: Sequence[TrainingPoint],
                 refine: str | None = None) -> tuple[float, float]:
    """Least-squares line through (kprime, fo) points.

    The optional damped iterative refinement converges to the same
    optimum for this linear model; it exists to show the equivalence.
    """
    if len(points) < 2:
        raise ValueError("need at least 2 training points")
    ks = np.array([p.kprime for p in points], dtype=float)
    fos = np.array([p.fo for p in points], dtype=float)
    if np.all(ks == ks[0]):
        raise ValueError("all kprime values equal; the line is undetermined")
    theta1, theta2 = np.polyfit(ks, fos, 1)
    if refine == "damped":
        from scipy.optimize import least_squares

        sol = least_squares(lambda th: th[0] * ks + th[1] - fos,
                            x0=[theta1, theta2], method="lm")
        theta1, theta2 = sol.x
    elif refine is not None:
        raise ValueError(f"unknown refinement {refine!r}")
    return float(theta1), float(theta2)


def predict_query_latency(model: LatencyModel) -> float:
    return model.fr_fq + model.theta1 * model.k + model.theta2


def predict_insert_latency(fp_fs: float, ct: float) -> tuple[float, bool]:
    return fp_fs, fp_fs <= ct


def prediction_accuracy(te: float, ta: float) -> float:
    """1 - |te-ta|/ta, clamped into [0, 1]."""
    if ta <= 0:
        raise ValueError(f"actual latency must be > 0, got {ta}")
    return max(0.0, 1.0 - abs(te - ta) / ta)


def measure_parallel_time(workload: Callable[[], object],
                          repetitions: int = 5) -> float:
    """Median wall time of the callable over R runs."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    times = []
    for _ in range(repetitions):
        began = time.perf_counter()
        workload()
        times.append(time.perf_counter() - began)
    return statistics.median(times)


@dataclass
class WorkloadTraining:
    parallel: float | None = None
    points: list[TrainingPoint] | None = None

    def __post_init__(self) -> None:
        if self.points is None:
            self.points = []


def load_training(path: str | Path) -> dict[str, WorkloadTraining]:
    out: dict[str, WorkloadTraining] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'workload kprime seconds'")
        workload, kprime, seconds = parts[0], int(parts[1]), float(parts[2])
        entry = out.setdefault(workload, WorkloadTraining())
        if kprime == 1:
            entry.parallel = seconds
        else:
            entry.points.append(TrainingPoint(kprime, seconds))
    return out


@dataclass(frozen=True)
class ModelReport:
    workload: str
    theta1: float | None
    theta2: float | None
    te: float
    ok: bool | None
    acc_p: float | None


def build_reports(training: Mapping[str, WorkloadTraining], k: int, ct: float,
                  ta: Mapping[str, float] | None = None,
                  refine: str | None = None) -> list[ModelReport]:
    """One report row per workload in the training set.

    Insert rows need only the parallel time (Te = fp_fs, checked against
    ct); query rows with >= 2 overhead points get the fitted line, else
    the overhead is taken as zero.
    """
    ta = ta or {}
    reports = []
    for workload, entry in training.items():
        if entry.parallel is None:
            raise ValueError(f"workload {workload!r} has no kprime=1 row")
        if workload == "insert":
            te, ok = predict_insert_latency(entry.parallel, ct)
            theta1 = theta2 = None
        else:
            if len(entry.points) >= 2:
                theta1, theta2 = fit_overhead(entry.points, refine=refine)
            else:
                theta1, theta2 = 0.0, 0.0
            model = LatencyModel(fp_fs=0.0, fr_fq=entry.parallel,
                                 theta1=theta1, theta2=theta2, ct=ct, k=k)
            te = predict_query_latency(model)
            ok = None
        acc = None
        if workload in ta:
            acc = prediction_accuracy(te, ta[workload])
        reports.append(ModelReport(workload, theta1, theta2, te, ok, acc))
    return reports


class DeskBench:
    """Single-machine measurement rig for the model's inputs.

    Staging follows the modulus strategy: of a generated night, only rows
    whose partition cell satisfies cell % k == residue are kept, giving a
    worker roughly 1/k of the volume. Insert measurements replay the
    staged night into a fresh store; query measurements run against one
    staged store, timed per call.
    """

    def __init__(self, config, k: int = 1, residue: int = 0):
        from .config import Config  # noqa: F401 (just the duck type)
        from .datagen import UnitGenerator
        from .epgrid import partition_of
        from .ingest import CycleBatch
        from .sim import build_grids

        if k < 1 or not 0 <= residue < k:
            raise ValueError(f"need k >= 1 and 0 <= residue < k, got {k}/{residue}")
        self.config = config
        self.k = k
        self.residue = residue
        gen = config.gen_config()
        sources = [UnitGenerator(gen, i) for i in range(config.units)]
        self.grids = build_grids(config, [s.unit_id for s in sources])
        self._batches: list[list[CycleBatch]] = []
        for source in sources:
            grid = self.grids[source.unit_id]
            kept = {
                oid for i, oid in enumerate(source.oids)
                if partition_of(grid, *source.object_position(i))[1] % k == residue
            }
            unit_batches = []
            for t in range(1, gen.cycles + 1):
                batch = source.cycle(t)
                unit_batches.append(CycleBatch(
                    batch.unit_id, t,
                    [r for r in batch.catalog if r.oid in kept],
                    type(batch.eset)(t, frozenset(batch.eset.oids & kept))))
            self._batches.append(unit_batches)
        self._staged = None

    def _ingest(self):
        from .ingest import UnitWorker
        from .storage import MemoryBackend

        store = MemoryBackend()
        latencies = []
        for unit_batches in self._batches:
            unit = unit_batches[0].unit_id
            worker = UnitWorker(unit, self.grids[unit], store, c=self.config.c)
            for batch in unit_batches:
                latencies.append(worker.process_cycle(batch).latency_s)
        return store, statistics.mean(latencies)

    def measure_insert(self, repetitions: int = 5) -> float:
        """Median over repetitions of the mean per-cycle insert latency
        on a fresh store (this is the fp_fs input at cluster size k)."""
        return measure_parallel_time(lambda: self._ingest(), repetitions)

    def _engine(self):
        from .query import QueryEngine

        if self._staged is None:
            store, _ = self._ingest()
            self._staged = QueryEngine(store, self.grids, self.config.cycles)
        return self._staged

    def _setup_queries(self):
        from .domain import TimeInterval

        engine = self._engine()
        interval = TimeInterval(1, self.config.cycles)
        events = sorted(engine.events_in(interval), key=lambda e: (e.stime, e.eid))
        if not events:
            raise RuntimeError("staged night has no events; cannot time queries")
        return engine, interval, events[len(events) // 2].eid

    def run(self, workload: str):
        engine, interval, eid = self._setup_queries()
        if workload == "probing":
            return engine.probe(None, interval)
        if workload == "listing":
            return engine.list_events(None, interval)
        if workload == "stretching":
            return engine.stretch(eid, 1, 1)
        raise ValueError(f"unknown workload {workload!r}")

    def measure(self, workload: str, repetitions: int = 5) -> float:
        if workload == "insert":
            return self.measure_insert(repetitions)
        if workload not in QUERY_WORKLOADS:
            raise ValueError(f"unknown workload {workload!r}")
        self._setup_queries()
        return measure_parallel_time(lambda: self.run(workload), repetitions)

    def training_rows(self, repetitions: int = 5) -> list[str]:
        """kprime=1 rows for every workload, ready for the training file."""
        return [f"{w} 1 {self.measure(w, repetitions):.6f}" for w in WORKLOADS]


def format_reports(reports: Iterable[ModelReport], k: int, ct: float) -> str:
    lines = [f"latency prediction at K={k}, ct={ct:g}s",
             f"{'workload':<12} {'theta1':>9} {'theta2':>9} {'Te(s)':>8} "
             f"{'<=ct':>5} {'acc_p':>6}"]
    for r in reports:
        t1 = f"{r.theta1:.4f}" if r.theta1 is not None else "-"
        t2 = f"{r.theta2:.4f}" if r.theta2 is not None else "-"
        ok = "-" if r.ok is None else ("yes" if r.ok else "NO")
        acc = f"{r.acc_p:.3f}" if r.acc_p is not None else "-"
        lines.append(f"{r.workload:<12} {t1:>9} {t2:>9} {r.te:>8.3f} "
                     f"{ok:>5} {acc:>6}")
    return "\n".join(lines)
