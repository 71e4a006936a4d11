import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";

interface Call {
  url: string;
  method: string | undefined;
}

function stubClient(
  status: number,
  body: string,
): { client: ApiClient; calls: Call[] } {
  const calls: Call[] = [];
  const fetchImpl = async (url: string, init?: RequestInit) => {
    calls.push({ url, method: init?.method });
    return new Response(body, {
      status,
      headers: { "content-type": "application/json" },
    });
  };
  return { client: new ApiClient("http://host:1", fetchImpl), calls };
}

describe("ApiClient", () => {
  it("builds probe URLs from interval and region", async () => {
    const { client, calls } = stubClient(200, '{"count":3}');
    const result = await client.probe(
      { ts: 4, te: 7 },
      { x: 0.5, y: 0.5, r: 0.45 },
    );
    expect(result).toEqual({ ok: true, data: { count: 3 } });
    const url = new URL(calls[0].url);
    expect(url.pathname).toBe("/probe");
    expect(Object.fromEntries(url.searchParams)).toEqual({
      ts: "4",
      te: "7",
      x: "0.5",
      y: "0.5",
      r: "0.45",
    });
    expect(calls[0].method).toBe("GET");
  });

  it("omits the region entirely when not given", async () => {
    const { client, calls } = stubClient(200, '{"count":0}');
    await client.probe({ ts: 1, te: 2 });
    const url = new URL(calls[0].url);
    expect([...url.searchParams.keys()].sort()).toEqual(["te", "ts"]);
  });

  it("surfaces the server detail on a 400", async () => {
    const { client } = stubClient(400, '{"detail":"ts must be >= 1"}');
    const result = await client.probe({ ts: 0, te: 2 });
    expect(result).toEqual({
      ok: false,
      status: 400,
      error: "ts must be >= 1",
    });
  });

  it("maps a steering 409 with its detail", async () => {
    const { client } = stubClient(409, '{"detail":"simulation is done"}');
    const result = await client.pause();
    expect(result.ok).toBe(false);
    if (!result.ok) {
      expect(result.status).toBe(409);
      expect(result.error).toBe("simulation is done");
    }
  });

  it("reports transport failures with a null status", async () => {
    const client = new ApiClient("http://host:1", async () => {
      throw new Error("connection refused");
    });
    const result = await client.status();
    expect(result).toEqual({
      ok: false,
      status: null,
      error: "connection refused",
    });
  });

  it("posts steering calls", async () => {
    const { client, calls } = stubClient(200, "{}");
    await client.setRate(2.5);
    const url = new URL(calls[0].url);
    expect(url.pathname).toBe("/sim/rate");
    expect(url.searchParams.get("value")).toBe("2.5");
    expect(calls[0].method).toBe("POST");
  });

  it("keeps a non-JSON error body readable", async () => {
    const { client } = stubClient(502, "bad gateway");
    const result = await client.status();
    expect(result.ok).toBe(false);
    if (!result.ok) {
      expect(result.error).toBe("bad gateway");
    }
  });

  it("builds stretch URLs with the raw event id", async () => {
    const { client, calls } = stubClient(
      200,
      '{"eid":"oid3|5","oid":"oid3","ts":4,"te":7,"rows":[]}',
    );
    await client.stretch("oid3|5", 1, 1);
    const url = new URL(calls[0].url);
    expect(url.searchParams.get("eid")).toBe("oid3|5");
    expect(url.searchParams.get("dt1")).toBe("1");
    expect(url.searchParams.get("dt2")).toBe("1");
  });
});
