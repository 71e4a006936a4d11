/** View state: the live feed buffer and the drill-down flow. All
 * numbers held here are copied straight out of API responses; nothing
 * is aggregated client-side. */

import type { ApiClient } from "./api.js";
import type {
  EventSeries,
  FeedRecord,
  IntervalParams,
  RegionParams,
  StretchResult,
} from "./types.js";

/** Rolling buffer of per-cycle feed records plus the latest per-cell
 * running total as reported by the server. */
export class FeedStore {
  readonly records: FeedRecord[] = [];
  /** pid -> latest server-reported running total and when it changed. */
  readonly heat = new Map<string, { total: number; t: number }>();
  watermark = 0;
  ended = false;

  constructor(readonly capacity: number = 240) {}

  push(record: FeedRecord): void {
    this.records.push(record);
    if (this.records.length > this.capacity) {
      this.records.shift();
    }
    this.watermark = Math.max(this.watermark, record.watermark);
    for (const delta of record.deltas) {
      this.heat.set(delta.pid, { total: delta.total, t: record.t });
    }
  }

  /** New-event count per buffered cycle, for the sparkline. */
  counts(): number[] {
    return this.records.map((r) => r.new_events);
  }

  /** Cycles whose record reported at least one new event. */
  alertCycles(): number[] {
    return this.records.filter((r) => r.new_events > 0).map((r) => r.t);
  }
}

/** Allows one task at a time; callers that lose the race are told so
 * instead of queueing a duplicate request. */
export class Gate {
  private busy = false;

  async run<T>(task: () => Promise<T>): Promise<T | undefined> {
    if (this.busy) {
      return undefined;
    }
    this.busy = true;
    try {
      return await task();
    } finally {
      this.busy = false;
    }
  }

  get inFlight(): boolean {
    return this.busy;
  }
}

export interface DrillState {
  interval: IntervalParams | null;
  region: RegionParams | null;
  probeCount: number | null;
  /** r >= rMin means the configured accuracy floor applies. */
  accuracyNote: string | null;
  events: EventSeries[] | null;
  stretch: StretchResult | null;
  stretchFor: { stime: number; etime: number } | null;
  error: string | null;
}

function emptyDrill(): DrillState {
  return {
    interval: null,
    region: null,
    probeCount: null,
    accuracyNote: null,
    events: null,
    stretch: null,
    stretchFor: null,
    error: null,
  };
}

/** The probe -> list -> stretch flow. Each step issues exactly one
 * call and every downstream step is invalidated when an upstream
 * answer changes. */
export class DrillDown {
  state: DrillState = emptyDrill();
  private readonly gate = new Gate();

  constructor(
    private readonly client: ApiClient,
    private readonly rMin: number = Math.sqrt(0.03 / Math.PI),
  ) {}

  /** One probe call; resets list and stretch. Returns false when a
   * call is already in flight. */
  async runProbe(
    interval: IntervalParams,
    region: RegionParams | null,
  ): Promise<boolean> {
    const ran = await this.gate.run(async () => {
      const next = emptyDrill();
      next.interval = interval;
      next.region = region;
      const result = await this.client.probe(interval, region ?? undefined);
      if (result.ok) {
        next.probeCount = result.data.count;
        if (region !== null) {
          next.accuracyNote =
            region.r >= this.rMin
              ? "accuracy floor applies"
              : "radius below the guaranteed floor";
        }
      } else {
        next.error = result.error;
      }
      this.state = next;
      return true;
    });
    return ran === true;
  }

  get listEnabled(): boolean {
    return (this.state.probeCount ?? 0) > 0;
  }

  /** One list call per probe result; disabled while the probe shows 0
   * and while another call is in flight. */
  async openList(): Promise<boolean> {
    if (!this.listEnabled || this.state.interval === null) {
      return false;
    }
    const interval = this.state.interval;
    const region = this.state.region;
    const ran = await this.gate.run(async () => {
      const result = await this.client.list(interval, region ?? undefined);
      if (result.ok) {
        this.state.events = result.data.events;
        this.state.stretch = null;
        this.state.stretchFor = null;
        this.state.error = null;
      } else {
        this.state.error = result.error;
      }
      return true;
    });
    return ran === true;
  }

  /** One stretch call per selected event. */
  async openStretch(eid: string, dt1: number, dt2: number): Promise<boolean> {
    const listed = (this.state.events ?? []).find((e) => e.eid === eid);
    if (listed === undefined) {
      return false;
    }
    const ran = await this.gate.run(async () => {
      const result = await this.client.stretch(eid, dt1, dt2);
      if (result.ok) {
        this.state.stretch = result.data;
        this.state.stretchFor = { stime: listed.stime, etime: listed.etime };
        this.state.error = null;
      } else {
        this.state.error = result.error;
      }
      return true;
    });
    return ran === true;
  }

  get inFlight(): boolean {
    return this.gate.inFlight;
  }
}
