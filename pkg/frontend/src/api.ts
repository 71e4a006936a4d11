/** HTTP and SSE clients. Every panel talks to the engine only through
 * this module, so each rendered number maps to one response captured
 * here. */

import type {
  AccuracyResult,
  ApiResult,
  FeedRecord,
  IntervalParams,
  ListResult,
  ProbeResult,
  RegionParams,
  StatusInfo,
  StretchResult,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

function buildUrl(
  base: string,
  path: string,
  params: Record<string, string | number | undefined>,
): string {
  const url = new URL(path, base);
  for (const [key, value] of Object.entries(params)) {
    if (value !== undefined) {
      url.searchParams.set(key, String(value));
    }
  }
  return url.toString();
}

async function errorDetail(response: Response): Promise<string> {
  const text = await response.text();
  try {
    const parsed = JSON.parse(text) as { detail?: unknown };
    if (parsed && typeof parsed.detail === "string") {
      return parsed.detail;
    }
  } catch {
    // not JSON; fall through to the raw body
  }
  return text.slice(0, 200) || `HTTP ${response.status}`;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: "GET" | "POST",
    path: string,
    params: Record<string, string | number | undefined> = {},
  ): Promise<ApiResult<T>> {
    const url = buildUrl(this.baseUrl, path, params);
    let response: Response;
    try {
      response = await this.fetchImpl(url, { method });
    } catch (err) {
      const msg = err instanceof Error ? err.message : String(err);
      return { ok: false, status: null, error: msg };
    }
    if (!response.ok) {
      return {
        ok: false,
        status: response.status,
        error: await errorDetail(response),
      };
    }
    return { ok: true, data: (await response.json()) as T };
  }

  status(): Promise<ApiResult<StatusInfo>> {
    return this.request("GET", "/status");
  }

  probe(
    interval: IntervalParams,
    region?: RegionParams,
  ): Promise<ApiResult<ProbeResult>> {
    return this.request("GET", "/probe", { ...interval, ...region });
  }

  list(
    interval: IntervalParams,
    region?: RegionParams,
  ): Promise<ApiResult<ListResult>> {
    return this.request("GET", "/list", { ...interval, ...region });
  }

  stretch(
    eid: string,
    dt1: number,
    dt2: number,
  ): Promise<ApiResult<StretchResult>> {
    return this.request("GET", "/stretch", { eid, dt1, dt2 });
  }

  accuracy(
    interval: IntervalParams,
    region: RegionParams,
  ): Promise<ApiResult<AccuracyResult>> {
    return this.request("GET", "/accuracy", { ...interval, ...region });
  }

  pause(): Promise<ApiResult<StatusInfo>> {
    return this.request("POST", "/sim/pause");
  }

  resume(): Promise<ApiResult<StatusInfo>> {
    return this.request("POST", "/sim/resume");
  }

  setRate(value: number): Promise<ApiResult<StatusInfo>> {
    return this.request("POST", "/sim/rate", { value });
  }
}

export interface SseEvent {
  event: string;
  data: string;
}

/** Incremental server-sent-events parser. Fed arbitrary chunk
 * boundaries, emits one event per blank-line-terminated block.
 * Comment lines (leading ':') are dropped. */
export class SseParser {
  private buffer = "";
  private eventName = "message";
  private dataLines: string[] = [];

  push(chunk: string): SseEvent[] {
    this.buffer += chunk;
    const out: SseEvent[] = [];
    let eol: number;
    while ((eol = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, eol).replace(/\r$/, "");
      this.buffer = this.buffer.slice(eol + 1);
      if (line === "") {
        if (this.dataLines.length > 0) {
          out.push({
            event: this.eventName,
            data: this.dataLines.join("\n"),
          });
        }
        this.eventName = "message";
        this.dataLines = [];
      } else if (line.startsWith(":")) {
        continue;
      } else if (line.startsWith("event:")) {
        this.eventName = line.slice(6).trim();
      } else if (line.startsWith("data:")) {
        this.dataLines.push(line.slice(5).replace(/^ /, ""));
      }
    }
    return out;
  }
}

/** Reconnect delay: doubles from half a second, capped at eight. */
export function backoffDelay(attempt: number): number {
  return Math.min(500 * 2 ** attempt, 8000);
}

export interface FeedCallbacks {
  onRecord: (record: FeedRecord) => void;
  onEnd?: () => void;
  /** Called with true when the stream drops, false once reconnected. */
  onStale?: (stale: boolean) => void;
}

/** Live feed reader over fetch streaming (works in browsers and node),
 * with automatic reconnect and a stale signal while disconnected. */
export class FeedSource {
  private controller: AbortController | null = null;
  private stopped = false;
  private attempt = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly callbacks: FeedCallbacks,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  start(): void {
    this.stopped = false;
    void this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.controller?.abort();
  }

  private async connect(): Promise<void> {
    this.controller = new AbortController();
    const parser = new SseParser();
    try {
      const response = await this.fetchImpl(
        new URL("/stream", this.baseUrl).toString(),
        { signal: this.controller.signal } as RequestInit,
      );
      if (!response.ok || response.body === null) {
        throw new Error(`stream failed: HTTP ${response.status}`);
      }
      this.attempt = 0;
      this.callbacks.onStale?.(false);
      const reader = response.body.getReader();
      const decoder = new TextDecoder();
      for (;;) {
        const { done, value } = await reader.read();
        if (done) {
          break;
        }
        for (const evt of parser.push(decoder.decode(value, { stream: true }))) {
          if (evt.event === "end") {
            this.callbacks.onEnd?.();
            this.stop();
            return;
          }
          this.callbacks.onRecord(JSON.parse(evt.data) as FeedRecord);
        }
      }
      throw new Error("stream closed");
    } catch (err) {
      if (this.stopped) {
        return;
      }
      this.callbacks.onStale?.(true);
      const delay = backoffDelay(this.attempt);
      this.attempt += 1;
      this.timer = setTimeout(() => {
        this.timer = null;
        void this.connect();
      }, delay);
    }
  }
}
