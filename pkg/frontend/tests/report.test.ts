/**
 * Report view over the golden store: everything on screen is a verbatim
 * projection of the fetched documents — the static page, every tooltip,
 * and every drill-down row.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ReviewApi } from "../src/api.js";
import { ReportView } from "../src/reportView.js";
import { ReportDocument } from "../src/types.js";
import {
  GOLDEN_REPORT,
  ServerHandle,
  buildGoldenStore,
  fire,
  mount,
  startServer,
  until,
  walkNumbers,
} from "./helpers.js";

const PORT = 18313;
const RUN = "demo-2024";

let server: ServerHandle;
let api: ReviewApi;
let root: HTMLElement;
let view: ReportView;
let golden: ReportDocument;

beforeAll(async () => {
  const tmp = mkdtempSync(join(tmpdir(), "review-report-"));
  const { store, config } = buildGoldenStore(tmp);
  server = await startServer(config, store, PORT);
  api = new ReviewApi(server.baseUrl);
  golden = JSON.parse(readFileSync(GOLDEN_REPORT, "utf-8")) as ReportDocument;

  root = mount();
  view = new ReportView(api, RUN);
  view.mount(root);
  await view.load();
});

afterAll(async () => {
  await server?.stop();
});

function segments(): SVGRectElement[] {
  return [...root.querySelectorAll<SVGRectElement>("rect.segment")];
}

describe("static page", () => {
  it("renders charts for both countries and providers plus the tables", () => {
    expect(root.querySelectorAll(".stacked-bars").length).toBe(2);
    expect(root.querySelectorAll(".marimekko").length).toBe(4);
    expect(root.querySelectorAll(".webstruct-block").length).toBe(4);
    // 28 answer-stat rows plus the header.
    expect(root.querySelectorAll(".stats-table tr").length).toBe(golden.answer_stats.length + 1);
  });

  it("every number on the page equals its field in the fetched document", () => {
    const checked = walkNumbers(root, { report: view.document });
    expect(checked).toBeGreaterThan(400);
  });

  it("the fetched document is the committed golden document", () => {
    expect(view.document).toEqual(golden);
  });

  it("skipped web-structure tables say why instead of showing numbers", () => {
    const blocks = [...root.querySelectorAll(".webstruct-block")];
    const skipped = blocks.filter((b) => b.textContent!.includes("skipped:"));
    expect(skipped.length).toBe(2);
    for (const block of skipped) {
      expect(block.textContent).toContain("visited sources");
      expect(block.querySelectorAll("[data-path]").length).toBe(0);
    }
  });
});

describe("tooltips", () => {
  it("every segment tooltip is a projection of the document", () => {
    const all = segments();
    // 5 classes × (18 + 10 stacked bars + 4 mosaics × 3 bands) = 200.
    expect(all.length).toBe(200);
    const tooltip = root.querySelector("#tooltip")!;
    let checked = 0;
    for (const rect of all) {
      fire(rect, "mouseenter");
      expect(tooltip.classList.contains("hidden")).toBe(false);
      expect(tooltip.textContent).toContain(rect.dataset.barrier!);
      checked += walkNumbers(tooltip, { report: view.document });
      fire(rect, "mouseleave");
      expect(tooltip.classList.contains("hidden")).toBe(true);
    }
    // Two numbers per tooltip, except the ten segments of the two empty US
    // high bands, whose share has no document field and is shown as "—".
    expect(checked).toBeGreaterThanOrEqual(all.length * 2 - 10);
  });
});

describe("drill-down", () => {
  it("a stacked primary segment lists only manifest-primary citations", async () => {
    const rect = segments().find(
      (r) =>
        r.dataset.country === "JP" &&
        r.dataset.party === "cdp" &&
        r.dataset.provider === "aurora" &&
        r.dataset.barrier === "primary" &&
        !r.dataset.band,
    )!;
    fire(rect, "click");
    await until("drill-down rows", () => view.lastDrilldown !== null);

    const rows = view.lastDrilldown!;
    const table = golden.proportions.find(
      (t) => t.country === "JP" && t.provider === "aurora" && t.party === "cdp",
    )!;
    expect(rows.length).toBe(table.counts.primary);
    for (const row of rows) {
      expect(row.party).toBe("cdp");
      expect(row.provider).toBe("aurora");
      expect(row.barrier).toBe("primary");
      expect(row.origin).toBe("manifest_primary");
    }

    const panel = root.querySelector("#drilldown")!;
    const countNode = panel.querySelector<HTMLElement>(".drilldown-count [data-path]")!;
    expect(countNode.dataset.value).toBe(String(table.counts.primary));
    const checked = walkNumbers(panel, { report: view.document, citations: rows });
    expect(checked).toBeGreaterThan(rows.length);
  });

  it("a mosaic cell lists citations for exactly that band and class", async () => {
    const rect = segments().find(
      (r) =>
        r.dataset.country === "JP" &&
        r.dataset.provider === "aurora" &&
        r.dataset.band === "high" &&
        r.dataset.barrier === "primary",
    )!;
    fire(rect, "click");
    await until("mosaic drill-down", () => view.lastDrilldown !== null);

    const rows = view.lastDrilldown!;
    const matrix = golden.band_matrices.find((m) => m.country === "JP" && m.provider === "aurora")!;
    expect(rows.length).toBe(matrix.counts.high.primary);
    for (const row of rows) {
      expect(row.band).toBe("high");
      expect(row.barrier).toBe("primary");
      expect(row.sim_max).not.toBeNull();
      expect(row.sim_max!).toBeGreaterThan(0.9);
    }
    const checked = walkNumbers(root.querySelector("#drilldown")!, {
      report: view.document,
      citations: rows,
    });
    expect(checked).toBeGreaterThan(0);
  });

  it("a zero-count segment shows the empty state", async () => {
    // In the golden run the mid reflection band contains no primary
    // citations for JP × aurora.
    const matrix = golden.band_matrices.find((m) => m.country === "JP" && m.provider === "aurora")!;
    expect(matrix.counts.mid.primary ?? 0).toBe(0);
    const rect = segments().find(
      (r) =>
        r.dataset.country === "JP" &&
        r.dataset.provider === "aurora" &&
        r.dataset.band === "mid" &&
        r.dataset.barrier === "primary",
    )!;
    fire(rect, "click");
    await until("empty drill-down", () => view.lastDrilldown !== null && view.lastDrilldown.length === 0);

    const panel = root.querySelector("#drilldown")!;
    expect(panel.querySelector(".empty-state")?.textContent).toContain("No citations");
    const countNode = panel.querySelector<HTMLElement>(".drilldown-count [data-path]")!;
    expect(countNode.dataset.value).toBe("0");
  });
});
