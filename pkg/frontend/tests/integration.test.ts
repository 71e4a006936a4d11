/** Drives a real engine (the canned demo night, served over HTTP)
 * through the dashboard's own client and state code: the drill-down
 * walkthrough, steering, and the live feed. */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, FeedSource } from "../src/api.js";
import { DrillDown } from "../src/state.js";
import type { FeedRecord } from "../src/types.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let serverLog = "";
const client = new ApiClient(BASE);

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    const status = await client.status();
    if (status.ok && status.data.watermark >= 8) {
      return;
    }
    await sleep(250);
  }
  throw new Error(`server not ready on ${BASE}\n${serverLog}`);
}

async function watermarkNow(): Promise<number> {
  const status = await client.status();
  if (!status.ok) {
    throw new Error(`status failed: ${status.error}`);
  }
  return status.data.watermark;
}

function collectRecords(
  count: number,
  timeoutMs: number,
  accept: (r: FeedRecord) => boolean = () => true,
): Promise<FeedRecord[]> {
  return new Promise((resolve, reject) => {
    const got: FeedRecord[] = [];
    const source = new FeedSource(BASE, {
      onRecord: (record) => {
        if (accept(record)) {
          got.push(record);
        }
        if (got.length >= count) {
          source.stop();
          clearTimeout(timer);
          resolve(got);
        }
      },
    });
    const timer = setTimeout(() => {
      source.stop();
      reject(new Error(`only ${got.length}/${count} records arrived`));
    }, timeoutMs);
    source.start();
  });
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "aserv-dash-"));
  const config = join(dir, "config.yaml");
  writeFileSync(config, `http_port: ${PORT}\n`);
  server = spawn(
    "python3",
    ["-m", "aserv.cli", "--config", config, "run", "--demo", "--serve"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => {
    serverLog += String(chunk);
  });
  server.stderr?.on("data", (chunk) => {
    serverLog += String(chunk);
  });
  await waitForServer();
});

afterAll(async () => {
  server.kill("SIGTERM");
  await sleep(200);
  server.kill("SIGKILL");
});

describe("drill-down walkthrough", () => {
  it("probe shows 3, list shows the three events, stretch spans t4..t7", async () => {
    const drill = new DrillDown(client);
    await drill.runProbe({ ts: 4, te: 7 }, null);
    expect(drill.state.error).toBeNull();
    expect(drill.state.probeCount).toBe(3);
    expect(drill.listEnabled).toBe(true);

    expect(await drill.openList()).toBe(true);
    const events = drill.state.events ?? [];
    expect(events.map((e) => e.eid)).toEqual(["oid1|3", "oid2|4", "oid3|5"]);

    expect(await drill.openStretch("oid3|5", 1, 1)).toBe(true);
    const stretch = drill.state.stretch!;
    expect(stretch.ts).toBe(4);
    expect(stretch.te).toBe(7);
    expect(stretch.rows.map((r) => r.t)).toEqual([4, 5, 6, 7]);
    expect(drill.state.stretchFor).toEqual({ stime: 5, etime: 6 });
  });

  it("an off-map region probes zero and keeps list disabled", async () => {
    const drill = new DrillDown(client);
    await drill.runProbe({ ts: 4, te: 7 }, { x: 5.0, y: 5.0, r: 0.05 });
    expect(drill.state.probeCount).toBe(0);
    expect(drill.listEnabled).toBe(false);
    expect(await drill.openList()).toBe(false);
  });

  it("a region covering the map still finds all three", async () => {
    const drill = new DrillDown(client);
    await drill.runProbe({ ts: 4, te: 7 }, { x: 0.5, y: 0.5, r: 0.45 });
    expect(drill.state.probeCount).toBe(3);
    expect(drill.state.accuracyNote).toBe("accuracy floor applies");
  });

  it("unknown event ids surface the server error inline", async () => {
    const result = await client.stretch("ghost|1", 1, 1);
    expect(result.ok).toBe(false);
    if (!result.ok) {
      expect(result.status).toBe(404);
    }
  });
});

describe("live feed", () => {
  it("streams committed cycles in order with per-cell deltas", async () => {
    const records = await collectRecords(6, 20_000);
    const ts = records.map((r) => r.t);
    for (let i = 1; i < ts.length; i += 1) {
      expect(ts[i]).toBe(ts[i - 1] + 1);
    }
    for (const record of records) {
      expect(record.watermark).toBeGreaterThanOrEqual(record.t);
      expect(Array.isArray(record.deltas)).toBe(true);
    }
  });

  it("eventually flags a cycle with a new event as an alert", async () => {
    const [alert] = await collectRecords(1, 30_000, (r) => r.new_events > 0);
    expect(alert.new_events).toBeGreaterThan(0);
    const fresh = alert.deltas.filter((d) => d.new > 0);
    expect(fresh.length).toBeGreaterThan(0);
  });
});

describe("steering", () => {
  it("pause freezes the watermark and resume advances it", async () => {
    const paused = await client.pause();
    expect(paused.ok).toBe(true);
    await sleep(300);
    const frozen = await watermarkNow();
    await sleep(700);
    expect(await watermarkNow()).toBe(frozen);

    const resumed = await client.resume();
    expect(resumed.ok).toBe(true);
    const deadline = Date.now() + 10_000;
    let advanced = await watermarkNow();
    while (advanced <= frozen && Date.now() < deadline) {
      await sleep(200);
      advanced = await watermarkNow();
    }
    expect(advanced).toBeGreaterThan(frozen);
  });

  it("doubling the rate shortens the cycle gap", async () => {
    const gaps = async (): Promise<number> => {
      const stamps: number[] = [];
      await collectRecords(9, 20_000, () => {
        stamps.push(Date.now());
        return true;
      });
      const deltas = stamps.slice(1).map((v, i) => v - stamps[i]);
      deltas.sort((a, b) => a - b);
      return deltas[Math.floor(deltas.length / 2)];
    };

    const setSlow = await client.setRate(1.0);
    expect(setSlow.ok).toBe(true);
    const slow = await gaps();

    const setFast = await client.setRate(2.0);
    expect(setFast.ok).toBe(true);
    const status = await client.status();
    expect(status.ok && status.data.rate).toBe(2.0);
    const fast = await gaps();

    expect(fast).toBeLessThan(slow * 0.85);
  });
});
