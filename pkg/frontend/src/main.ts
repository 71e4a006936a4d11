/** DOM wiring. Logic lives in api/state/render; this file only moves
 * values between inputs, the stores, and the page. */

import { ApiClient, FeedSource } from "./api.js";
import { DrillDown, FeedStore } from "./state.js";
import {
  alertLine,
  heatGrids,
  heatOpacity,
  seriesPlot,
  sparklinePath,
  watermarkLabel,
} from "./render.js";
import type { ApiResult, StatusInfo } from "./types.js";

const baseUrl = new URLSearchParams(window.location.search).get("api")
  ?? "http://127.0.0.1:8787";

const client = new ApiClient(baseUrl);
const feed = new FeedStore();
const drill = new DrillDown(client);

let status: StatusInfo | null = null;
let stale = false;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

function numberInput(id: string): number | null {
  const raw = el<HTMLInputElement>(id).value.trim();
  if (raw === "") {
    return null;
  }
  const value = Number(raw);
  return Number.isFinite(value) ? value : null;
}

function renderHeader(): void {
  el("watermark").textContent = watermarkLabel(status, stale);
  el("stale-badge").hidden = !stale;
  const state = status?.state ?? "unknown";
  el("sim-state").textContent = state;
  el("rate-now").textContent = status ? `rate ${status.rate}` : "";
}

function renderFeed(): void {
  el("sparkline-path").setAttribute("d", sparklinePath(feed.counts(), 600, 60));
  const alerts = feed.records.filter((r) => r.new_events > 0).slice(-8);
  el("alerts").innerHTML = alerts.length
    ? alerts.map((r) => `<li>${alertLine(r)}</li>`).join("")
    : `<li class="muted">no new events yet</li>`;

  const grids = heatGrids(feed.heat);
  const parts: string[] = [];
  for (const grid of grids) {
    const cell = 18;
    const rows = grid.cells
      .map((c) => {
        const o = heatOpacity(c.total, grid.max);
        return `<rect x="${c.col * cell}" y="${c.row * cell}" width="${cell - 2}"` +
          ` height="${cell - 2}" fill="#2563eb" fill-opacity="${o}">` +
          `<title>${c.pid}: ${c.total}</title></rect>`;
      })
      .join("");
    parts.push(
      `<figure><figcaption>${grid.unit}</figcaption>` +
        `<svg width="${grid.cols * cell}" height="${grid.rows * cell}">${rows}</svg></figure>`,
    );
  }
  el("heat").innerHTML = parts.join("") || "<p class=\"muted\">no counts yet</p>";
}

function renderDrill(): void {
  const s = drill.state;
  el("probe-result").textContent =
    s.probeCount === null ? "-" : String(s.probeCount);
  el("accuracy-note").textContent = s.accuracyNote ?? "";
  el<HTMLButtonElement>("list-btn").disabled = !drill.listEnabled;
  el("drill-error").textContent = s.error ?? "";

  const listNode = el("event-list");
  if (s.events === null) {
    listNode.innerHTML = "";
  } else if (s.events.length === 0) {
    listNode.innerHTML = "<li class=\"muted\">no matching events</li>";
  } else {
    listNode.innerHTML = s.events
      .map(
        (e) =>
          `<li><button data-eid="${e.eid}">${e.eid}</button>` +
          ` cell ${e.pid}, cycles ${e.stime}..${e.etime}, ${e.rows.length} rows</li>`,
      )
      .join("");
    for (const btn of listNode.querySelectorAll("button[data-eid]")) {
      btn.addEventListener("click", () => {
        const dt1 = numberInput("dt1") ?? 0;
        const dt2 = numberInput("dt2") ?? 0;
        void drill
          .openStretch(btn.getAttribute("data-eid")!, dt1, dt2)
          .then(renderDrill);
      });
    }
  }

  const plotNode = el("stretch-plot");
  if (s.stretch === null) {
    plotNode.innerHTML = "";
    el("stretch-caption").textContent = "";
  } else {
    const plot = seriesPlot(s.stretch.rows, s.stretchFor, 600, 120);
    const band = plot.span
      ? `<rect x="${plot.span.x0}" y="0" width="${Math.max(2, plot.span.x1 - plot.span.x0)}"` +
        ` height="120" fill="#fbbf24" fill-opacity="0.35"></rect>`
      : "";
    const path = plot.points.length
      ? `<path d="M${plot.points.map((p) => `${p.x},${p.y}`).join(" L")}"` +
        ` fill="none" stroke="#111" stroke-width="1.5"></path>`
      : "";
    const dots = plot.points
      .map(
        (p) =>
          `<circle cx="${p.x}" cy="${p.y}" r="3" fill="#111">` +
          `<title>t=${p.t} value=${p.value}</title></circle>`,
      )
      .join("");
    plotNode.innerHTML = band + path + dots;
    el("stretch-caption").textContent =
      `${s.stretch.eid}: cycles ${s.stretch.ts}..${s.stretch.te}, ` +
      `${s.stretch.rows.length} rows (event span highlighted)`;
  }
}

function currentRegion() {
  const x = numberInput("reg-x");
  const y = numberInput("reg-y");
  const r = numberInput("reg-r");
  if (x === null && y === null && r === null) {
    return null;
  }
  if (x === null || y === null || r === null) {
    return undefined;
  }
  return { x, y, r };
}

el("probe-btn").addEventListener("click", () => {
  const ts = numberInput("int-ts");
  const te = numberInput("int-te");
  if (ts === null || te === null) {
    drill.state.error = "interval needs ts and te";
    renderDrill();
    return;
  }
  const region = currentRegion();
  if (region === undefined) {
    drill.state.error = "region needs all of x, y, r (or none)";
    renderDrill();
    return;
  }
  void drill.runProbe({ ts, te }, region).then(renderDrill);
});

el("list-btn").addEventListener("click", () => {
  void drill.openList().then(renderDrill);
});

function steer(action: () => Promise<ApiResult<StatusInfo>>): void {
  void action().then((result) => {
    el("steer-error").textContent = result.ok ? "" : result.error;
    void pollStatus();
  });
}

el("pause-btn").addEventListener("click", () => steer(() => client.pause()));
el("resume-btn").addEventListener("click", () => steer(() => client.resume()));
el("rate-btn").addEventListener("click", () => {
  const value = numberInput("rate-input");
  if (value === null) {
    el("steer-error").textContent = "rate needs a number";
    return;
  }
  steer(() => client.setRate(value));
});

async function pollStatus(): Promise<void> {
  const result = await client.status();
  if (result.ok) {
    status = result.data;
    stale = false;
  } else {
    stale = true;
  }
  renderHeader();
}

const source = new FeedSource(baseUrl, {
  onRecord: (record) => {
    feed.push(record);
    renderFeed();
  },
  onEnd: () => {
    feed.ended = true;
    void pollStatus();
  },
  onStale: (isStale) => {
    stale = isStale;
    renderHeader();
  },
});

source.start();
void pollStatus();
setInterval(() => void pollStatus(), 1000);
renderFeed();
renderDrill();
renderHeader();
