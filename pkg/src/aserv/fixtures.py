"""Canned demo night: three overlapping events on a handful of objects.

The schedule reproduces the walkthrough every analysis is documented
against: oid1 flagged over [3,5], oid2 over [4,4], oid3 over [5,6], so a
probe over [4,7] counts 3, listing returns those three series, and
stretching oid3|5 by one cycle each way spans t4..t7. With ``ambient``
the schedule continues with periodic filler events from cycle 12 on
(never touching [1,10]), which keeps a long-running demo feed alive.
"""

from __future__ import annotations

from .config import Config
from .datagen import ScheduleSource
from .sim import Simulation
from .storage import KVBackend

DEMO_UNIT = "u0"

DEMO_OBJECTS = [
    ("oid1", 0.21, 0.23),
    ("oid2", 0.68, 0.31),
    ("oid3", 0.42, 0.77),
    ("oid4", 0.88, 0.88),
]

DEMO_EVENTS = [
    ("oid1", 3, 5),
    ("oid2", 4, 4),
    ("oid3", 5, 6),
]


def demo_config(cycles: int = 10, ct: float = 1.0, rate: float = 0.0) -> Config:
    return Config(units=1, objects_per_unit=len(DEMO_OBJECTS), cycles=cycles,
                  side=1.0, ct=ct, m=4, c=1, partitions=16, seed=7, rate=rate)


def demo_source(cycles: int = 10, ambient: bool = False) -> ScheduleSource:
    events = list(DEMO_EVENTS)
    if ambient:
        spin = ["oid1", "oid2", "oid4"]
        for i, start in enumerate(range(12, cycles - 2, 7)):
            events.append((spin[i % len(spin)], start, start + 2))
    return ScheduleSource(DEMO_UNIT, DEMO_OBJECTS, events, cycles, m=4, seed=7)


def demo_simulation(cycles: int = 10, ct: float = 1.0, rate: float = 0.0,
                    ambient: bool = False,
                    store: KVBackend | None = None) -> Simulation:
    config = demo_config(cycles=cycles, ct=ct, rate=rate)
    return Simulation(config, store=store,
                      sources=[demo_source(cycles, ambient=ambient)],
                      cycles=cycles)
