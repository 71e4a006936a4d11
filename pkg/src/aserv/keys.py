"""Key layouts for everything the engine keeps in the key-value store.

All layouts are plain decimal text so that prefix scans are stable and
values stay readable when poking at a store by hand. Event start cycles
inside index keys are zero-padded so lexicographic order equals numeric
order; event ids themselves stay unpadded ("oid|3").
"""

from __future__ import annotations

STIME_PAD = 6

Pid = tuple[str, int]


def pid_str(pid: Pid) -> str:
    return f"{pid[0]}:{pid[1]}"


def parse_pid(text: str) -> Pid:
    unit, _, cell = text.rpartition(":")
    return unit, int(cell)


def meta_key(unit: str, cell: int) -> str:
    return f"meta:{unit}:{cell}"


def part_key(unit: str, cell: int) -> str:
    return f"part:{unit}:{cell}"


def icr_key(unit: str, cell: int) -> str:
    return f"icr:{unit}:{cell}"


def icr_prefix(unit: str | None = None) -> str:
    return f"icr:{unit}:" if unit else "icr:"


def sepi_key(unit: str, oid: str, stime: int) -> str:
    return f"sepi:{unit}:{oid}|{stime:0{STIME_PAD}d}"


def sepi_prefix(unit: str | None = None) -> str:
    return f"sepi:{unit}:" if unit else "sepi:"


def parse_sepi_key(key: str) -> tuple[str, str, int]:
    """Return (unit, oid, stime) from a SEPI key."""
    rest = key[len("sepi:"):]
    unit, _, tail = rest.partition(":")
    oid, _, stime = tail.rpartition("|")
    return unit, oid, int(stime)


def epi_start_key(unit: str, oid: str, stime: int) -> str:
    return f"epi:{unit}:s:{oid}|{stime:0{STIME_PAD}d}"


def epi_end_key(unit: str, oid: str, stime: int) -> str:
    return f"epi:{unit}:e:{oid}|{stime:0{STIME_PAD}d}"


def epi_prefix(unit: str, kind: str | None = None) -> str:
    """Prefix of one unit's endpoint records; both kinds unless one is named."""
    return f"epi:{unit}:{kind}:" if kind else f"epi:{unit}:"


def parse_epi_key(key: str) -> tuple[str, str, str, int]:
    """Return (unit, kind, oid, stime) from an endpoint record key."""
    _, unit, kind, tail = key.split(":", 3)
    oid, _, stime = tail.rpartition("|")
    return unit, kind, oid, int(stime)


def ev_key(eid: str) -> str:
    return f"ev:{eid}"
