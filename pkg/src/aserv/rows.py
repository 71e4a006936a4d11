"""Text layouts for catalog rows, reduced rows, and stored event rows.

One comma-separated line per observation: oid,x,y,t,d1,...  Reduced
(valid) rows are a strict prefix of the full row, so the byte ratio of
the two layouts is the field-count ratio. Stored event rows carry a
partition tag in front: "<unit>:<cell>|<full row>".
"""

from __future__ import annotations

from .domain import CatalogTuple, ValidTuple
from .keys import Pid, parse_pid, pid_str


def _fields(oid: str, x: float, y: float, t: int, d: tuple[float, ...]) -> list[str]:
    out = [oid, f"{x:.6f}", f"{y:.6f}", str(t)]
    out.extend(f"{v:.6g}" for v in d)
    return out


def format_catalog_row(row: CatalogTuple) -> str:
    return ",".join(_fields(row.oid, row.x, row.y, row.t, row.d))


def format_valid_row(row: ValidTuple) -> str:
    return ",".join(_fields(row.oid, row.x, row.y, row.t, row.d))


def parse_catalog_row(line: str) -> CatalogTuple:
    parts = line.split(",")
    return CatalogTuple(
        oid=parts[0],
        x=float(parts[1]),
        y=float(parts[2]),
        t=int(parts[3]),
        d=tuple(float(v) for v in parts[4:]),
    )


def parse_valid_row(line: str) -> ValidTuple:
    parts = line.split(",")
    return ValidTuple(
        oid=parts[0],
        x=float(parts[1]),
        y=float(parts[2]),
        t=int(parts[3]),
        d=tuple(float(v) for v in parts[4:]),
    )


def format_event_row(pid: Pid, row: CatalogTuple) -> str:
    return f"{pid_str(pid)}|{format_catalog_row(row)}"


def parse_event_row(text: str) -> tuple[Pid, CatalogTuple]:
    tag, _, line = text.partition("|")
    return parse_pid(tag), parse_catalog_row(line)
