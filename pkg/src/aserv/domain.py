"""Core value types shared by every other module.

Positions live in a flat Euclidean survey plane; time is a discrete,
non-negative cycle index. Wall-clock time is always derived as
``epoch + t * ct`` and never enters query logic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

EID_SEP = "|"


def format_eid(oid: str, stime: int) -> str:
    """Build an event id from an object id and the start cycle."""
    if EID_SEP in oid:
        raise ValueError(f"object id may not contain {EID_SEP!r}: {oid!r}")
    return f"{oid}{EID_SEP}{stime}"


def parse_eid(eid: str) -> tuple[str, int]:
    """Split an event id back into (oid, stime)."""
    oid, sep, stime = eid.rpartition(EID_SEP)
    if not sep or not oid or not stime.isdigit():
        raise ValueError(f"malformed event id: {eid!r}")
    return oid, int(stime)


@dataclass(frozen=True, slots=True)
class CatalogTuple:
    """One object observation: id, position, cycle, and m data attributes."""

    oid: str
    x: float
    y: float
    t: int
    d: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.oid or EID_SEP in self.oid:
            raise ValueError(f"bad object id: {self.oid!r}")
        if self.t < 0:
            raise ValueError(f"cycle index must be non-negative, got {self.t}")


@dataclass(frozen=True, slots=True)
class ValidTuple:
    """A catalog row reduced to the first c data attributes."""

    oid: str
    x: float
    y: float
    t: int
    d: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class ScientificEvent:
    """A contiguous run of cycles in which one object stayed flagged."""

    eid: str
    oid: str
    stime: int
    etime: int

    def __post_init__(self) -> None:
        if self.stime > self.etime:
            raise ValueError(f"event {self.eid}: stime {self.stime} > etime {self.etime}")

    @classmethod
    def open_at(cls, oid: str, t: int) -> "ScientificEvent":
        return cls(eid=format_eid(oid, t), oid=oid, stime=t, etime=t)

    def interval(self) -> "TimeInterval":
        return TimeInterval(self.stime, self.etime)


@dataclass(frozen=True, slots=True)
class Eset:
    """Object ids flagged by the event detector at one cycle."""

    t: int
    oids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "oids", frozenset(self.oids))


@dataclass(frozen=True, slots=True)
class Region:
    """Circular space constraint: center (x, y) and radius r.

    The boundary is inclusive: a point at distance exactly r is inside.
    """

    x: float
    y: float
    r: float

    def __post_init__(self) -> None:
        if self.r <= 0:
            raise ValueError(f"region radius must be positive, got {self.r}")


@dataclass(frozen=True, slots=True)
class TimeInterval:
    """Closed cycle interval [ts, te]."""

    ts: int
    te: int

    def __post_init__(self) -> None:
        if self.ts > self.te:
            raise ValueError(f"interval start {self.ts} > end {self.te}")


def intersects(a: TimeInterval, b: TimeInterval) -> bool:
    """True iff the two closed intervals share at least one cycle."""
    return max(a.ts, b.ts) <= min(a.te, b.te)


def contains(reg: Region, x: float, y: float) -> bool:
    """True iff (x, y) lies in the closed disk of reg."""
    dx = x - reg.x
    dy = y - reg.y
    return dx * dx + dy * dy <= reg.r * reg.r
