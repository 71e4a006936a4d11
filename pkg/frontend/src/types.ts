/** Wire types for the analysis engine's HTTP API and SSE feed. */

export interface StatusInfo {
  watermark: number;
  state: string;
  cycles: number;
  rate: number;
  units: Record<string, { committed: number }>;
  keys: number;
}

/** One per-cell count change inside a cycle's feed record. */
export interface CountDelta {
  pid: string;
  total: number;
  new: number;
}

/** One committed cycle on the live feed. */
export interface FeedRecord {
  t: number;
  watermark: number;
  latency: number;
  new_events: number;
  deltas: CountDelta[];
}

export interface CatalogRow {
  oid: string;
  x: number;
  y: number;
  t: number;
  d: number[];
}

export interface EventSeries {
  eid: string;
  oid: string;
  stime: number;
  etime: number;
  pid: string;
  rows: CatalogRow[];
}

export interface ListResult {
  events: EventSeries[];
}

export interface StretchResult {
  eid: string;
  oid: string;
  ts: number;
  te: number;
  rows: CatalogRow[];
}

export interface ProbeResult {
  count: number;
}

export interface AccuracyResult {
  probe: number;
  pcse: number;
  accuracy: number;
}

export interface RegionParams {
  x: number;
  y: number;
  r: number;
}

export interface IntervalParams {
  ts: number;
  te: number;
}

/** Every call resolves; failures carry the server detail or a transport
 * message so panels can surface them inline. */
export type ApiResult<T> =
  | { ok: true; data: T }
  | { ok: false; status: number | null; error: string };
