"""Accuracy-aware even-grid partitioner.

Each observation unit covers a square sub-area of size s. A disk query is
answered approximately by selecting every grid cell the disk touches, so
the selected area always covers the disk. Sizing the grid by
``grid_number`` guarantees the covered-area overshoot stays within the
accuracy budget: with gn cells of side l, the cells selected for a disk
of radius r occupy at most ``4r(l+w) + pi*r^2``, which keeps the area
ratio ``pi*r^2 / selected`` at or above the requested accuracy.

Cells use half-open rectangles [lo, hi), with the outermost row/column
closed on the top/right edge of the sub-area, so every point has exactly
one owning cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import Region
from .keys import Pid, meta_key


def grid_number(alpha: float, r: float, s: float) -> int:
    """Minimum cell count so disk queries of radius >= r keep accuracy >= alpha."""
    if not 0 < alpha < 1:
        raise ValueError(f"accuracy must be in (0, 1), got {alpha}")
    if r <= 0:
        raise ValueError(f"search radius must be positive, got {r}")
    if s <= 0:
        raise ValueError(f"sub-area must be positive, got {s}")
    return math.ceil(64.0 * s * alpha * alpha / (math.pi * r * (1.0 - alpha)) ** 2)


@dataclass(frozen=True)
class PartitionMeta:
    """Rectangle bounds of one partition: lower-left lo, upper-right hi."""

    pid: Pid
    lo: tuple[float, float]
    hi: tuple[float, float]


@dataclass(frozen=True)
class PartitionGrid:
    """Even grid over one unit's square sub-area."""

    unit_id: str
    origin: tuple[float, float]
    side: float
    gx: int
    gy: int

    @property
    def cell_w(self) -> float:
        return self.side / self.gx

    @property
    def cell_h(self) -> float:
        return self.side / self.gy

    @property
    def cells(self) -> int:
        return self.gx * self.gy

    def pid(self, ix: int, iy: int) -> Pid:
        return (self.unit_id, iy * self.gx + ix)

    def cell_meta(self, cell: int) -> PartitionMeta:
        ix = cell % self.gx
        iy = cell // self.gx
        x0, y0 = self.origin
        return PartitionMeta(
            pid=(self.unit_id, cell),
            lo=(x0 + ix * self.cell_w, y0 + iy * self.cell_h),
            hi=(x0 + (ix + 1) * self.cell_w, y0 + (iy + 1) * self.cell_h),
        )

    def contains_point(self, x: float, y: float) -> bool:
        x0, y0 = self.origin
        return x0 <= x <= x0 + self.side and y0 <= y <= y0 + self.side


def build_grid(
    unit_id: str,
    origin: tuple[float, float],
    s: float,
    alpha: float,
    r_min: float,
    partitions: int | None = None,
) -> PartitionGrid:
    """Build the unit grid sized by ``grid_number`` (or an explicit cell count).

    Cells are kept square, so the per-axis count is ceil(sqrt(gn)); the
    resulting gx*gy may overshoot gn, which only improves accuracy.
    """
    if s <= 0:
        raise ValueError(f"sub-area must be positive, got {s}")
    gn = partitions if partitions is not None else grid_number(alpha, r_min, s)
    if gn < 1:
        raise ValueError(f"partition count must be >= 1, got {gn}")
    per_axis = math.ceil(math.sqrt(gn))
    return PartitionGrid(
        unit_id=unit_id,
        origin=origin,
        side=math.sqrt(s),
        gx=per_axis,
        gy=per_axis,
    )


def partition_of(grid: PartitionGrid, x: float, y: float) -> Pid:
    """Owning partition of a point inside the sub-area."""
    x0, y0 = grid.origin
    if not grid.contains_point(x, y):
        raise ValueError(
            f"point ({x}, {y}) outside sub-area of unit {grid.unit_id!r}"
        )
    ix = min(int((x - x0) / grid.cell_w), grid.gx - 1)
    iy = min(int((y - y0) / grid.cell_h), grid.gy - 1)
    return grid.pid(ix, iy)


def parse_region(grid: PartitionGrid, reg: Region) -> set[Pid]:
    """Every partition whose cell rectangle intersects the closed disk.

    The disk may extend beyond (or lie fully outside) the sub-area; only
    cells of this grid are returned, possibly none.
    """
    x0, y0 = grid.origin
    w, h = grid.cell_w, grid.cell_h

    ix_lo = max(0, int(math.floor((reg.x - reg.r - x0) / w)))
    ix_hi = min(grid.gx - 1, int(math.floor((reg.x + reg.r - x0) / w)))
    iy_lo = max(0, int(math.floor((reg.y - reg.r - y0) / h)))
    iy_hi = min(grid.gy - 1, int(math.floor((reg.y + reg.r - y0) / h)))

    r2 = reg.r * reg.r
    found: set[Pid] = set()
    for iy in range(iy_lo, iy_hi + 1):
        cy_lo = y0 + iy * h
        # clamped-nearest-point test against the cell rectangle
        ny = min(max(reg.y, cy_lo), cy_lo + h)
        dy2 = (reg.y - ny) ** 2
        if dy2 > r2:
            continue
        for ix in range(ix_lo, ix_hi + 1):
            cx_lo = x0 + ix * w
            nx = min(max(reg.x, cx_lo), cx_lo + w)
            if (reg.x - nx) ** 2 + dy2 <= r2:
                found.add(grid.pid(ix, iy))
    return found


def selected_area(grid: PartitionGrid, reg: Region) -> float:
    """Total area of the cells ``parse_region`` selects."""
    return len(parse_region(grid, reg)) * grid.cell_w * grid.cell_h


def persist_metadata(grid: PartitionGrid, store) -> int:
    """Write one meta record per partition; returns the record count."""
    for cell in range(grid.cells):
        meta = grid.cell_meta(cell)
        value = f"{meta.lo[0]},{meta.lo[1]},{meta.hi[0]},{meta.hi[1]}"
        store.put(meta_key(grid.unit_id, cell), value)
    return grid.cells
