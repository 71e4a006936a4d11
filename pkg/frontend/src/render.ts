/** Pure drawing helpers: state in, SVG fragments or layout specs out.
 * No DOM access here so everything is unit-testable. */

import type { CatalogRow, FeedRecord, StatusInfo } from "./types.js";

/** SVG path for the per-cycle sparkline. An empty feed draws a flat
 * line along the zero baseline. */
export function sparklinePath(
  values: number[],
  width: number,
  height: number,
): string {
  if (values.length === 0) {
    return `M0,${height} L${width},${height}`;
  }
  const peak = Math.max(1, ...values);
  const step = values.length > 1 ? width / (values.length - 1) : width;
  const points = values.map((v, i) => {
    const x = values.length > 1 ? i * step : width / 2;
    const y = height - (v / peak) * height;
    return `${round2(x)},${round2(y)}`;
  });
  return `M${points.join(" L")}`;
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

export interface HeatCell {
  pid: string;
  index: number;
  col: number;
  row: number;
  total: number;
}

export interface HeatGrid {
  unit: string;
  cols: number;
  rows: number;
  cells: HeatCell[];
  max: number;
}

/** Lay cells out per unit in a near-square grid. The layout is a
 * display choice; the totals shown are the server's running counts. */
export function heatGrids(
  heat: Map<string, { total: number }>,
): HeatGrid[] {
  const byUnit = new Map<string, { index: number; total: number; pid: string }[]>();
  for (const [pid, entry] of heat) {
    const sep = pid.lastIndexOf(":");
    const unit = pid.slice(0, sep);
    const index = Number(pid.slice(sep + 1));
    const cells = byUnit.get(unit) ?? [];
    cells.push({ index, total: entry.total, pid });
    byUnit.set(unit, cells);
  }
  const grids: HeatGrid[] = [];
  for (const unit of [...byUnit.keys()].sort()) {
    const cells = byUnit.get(unit)!;
    const top = Math.max(...cells.map((c) => c.index));
    const cols = Math.ceil(Math.sqrt(top + 1));
    const rows = Math.ceil((top + 1) / cols);
    grids.push({
      unit,
      cols,
      rows,
      max: Math.max(1, ...cells.map((c) => c.total)),
      cells: cells
        .sort((a, b) => a.index - b.index)
        .map((c) => ({
          pid: c.pid,
          index: c.index,
          col: c.index % cols,
          row: Math.floor(c.index / cols),
          total: c.total,
        })),
    });
  }
  return grids;
}

/** Opacity in [0.15, 1] so occupied cells stay visible. */
export function heatOpacity(total: number, max: number): number {
  if (total <= 0) {
    return 0;
  }
  return round2(0.15 + 0.85 * (total / Math.max(1, max)));
}

export interface SeriesPlot {
  points: { x: number; y: number; t: number; value: number }[];
  /** Horizontal band covering the event's own span. */
  span: { x0: number; x1: number } | null;
}

/** Plot one object's first retained attribute over the stretched
 * range, with the event's own cycles highlighted. */
export function seriesPlot(
  rows: CatalogRow[],
  eventSpan: { stime: number; etime: number } | null,
  width: number,
  height: number,
): SeriesPlot {
  if (rows.length === 0) {
    return { points: [], span: null };
  }
  const ts = rows.map((r) => r.t);
  const values = rows.map((r) => (r.d.length > 0 ? r.d[0] : 0));
  const t0 = Math.min(...ts);
  const t1 = Math.max(...ts);
  const v0 = Math.min(...values);
  const v1 = Math.max(...values);
  const xOf = (t: number): number =>
    t1 === t0 ? width / 2 : ((t - t0) / (t1 - t0)) * width;
  const yOf = (v: number): number =>
    v1 === v0 ? height / 2 : height - ((v - v0) / (v1 - v0)) * height;
  const points = rows.map((r, i) => ({
    x: round2(xOf(r.t)),
    y: round2(yOf(values[i])),
    t: r.t,
    value: values[i],
  }));
  let span: SeriesPlot["span"] = null;
  if (eventSpan !== null) {
    const lo = Math.max(t0, eventSpan.stime);
    const hi = Math.min(t1, eventSpan.etime);
    if (lo <= hi) {
      span = { x0: round2(xOf(lo)), x1: round2(xOf(hi)) };
    }
  }
  return { points, span };
}

/** Watermark indicator text for the header. */
export function watermarkLabel(status: StatusInfo | null, stale: boolean): string {
  if (status === null) {
    return stale ? "watermark ? (stale)" : "watermark ?";
  }
  const suffix = stale ? " (stale)" : status.state === "paused" ? " (paused)" : "";
  return `watermark ${status.watermark}/${status.cycles}${suffix}`;
}

/** One-line summary of a feed record for the alert log. */
export function alertLine(record: FeedRecord): string {
  const cells = record.deltas
    .filter((d) => d.new > 0)
    .map((d) => d.pid)
    .join(", ");
  return `cycle ${record.t}: ${record.new_events} new (${cells})`;
}
