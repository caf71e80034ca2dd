/**
 * Report explorer: stacked bars per party×provider, a band×category
 * mosaic per country×provider, web-structure test tables, answer
 * statistics, and a drill-down from any chart segment to the citations
 * behind it.
 *
 * Every number on screen is a projection of a fetched server document
 * (see render.num); chart geometry scales by document values but the
 * only numerals shown are the document's own.  Drill-down counts come
 * from the report document, never from counting fetched rows.
 */

import { ApiError, ReviewApi } from "./api.js";
import { clear, el, num, svg } from "./render.js";
import {
  BandMatrix,
  CitationFilters,
  CitationRow,
  MarimekkoChart,
  ReportDocument,
  StackedChart,
  WebstructTable,
} from "./types.js";

const CLASS_COLORS: Record<string, string> = {
  primary: "#2563eb",
  opponent: "#dc2626",
  low: "#059669",
  medium: "#d97706",
  high: "#7c3aed",
};

const BAR_WIDTH = 26;
const BAR_GAP = 8;
const GROUP_GAP = 20;
const PLOT_HEIGHT = 180;
const MOSAIC_WIDTH = 440;
const MOSAIC_HEIGHT = 200;

interface CountRef {
  path: string;
  value: number;
}

export class ReportView {
  document: ReportDocument | null = null;
  /** Rows behind the open drill-down; the "citations" document for audits. */
  lastDrilldown: CitationRow[] | null = null;

  private root: HTMLElement | null = null;
  private tooltip: HTMLElement | null = null;
  private drilldownPanel: HTMLElement | null = null;

  constructor(
    private readonly api: ReviewApi,
    private readonly runId: string,
  ) {}

  mount(root: HTMLElement): void {
    this.root = root;
    clear(root);
    this.tooltip = el("div", "tooltip hidden");
    this.tooltip.id = "tooltip";
    root.appendChild(this.tooltip);
  }

  async load(): Promise<void> {
    this.document = await this.api.getReport(this.runId);
    this.render();
  }

  private render(): void {
    const root = this.root;
    const doc = this.document;
    if (!root || !doc) return;
    clear(root);
    root.appendChild(this.tooltip!);
    this.lastDrilldown = null;

    root.appendChild(this.renderProvenance(doc));

    const charts = el("section", "charts");
    charts.appendChild(el("h2", undefined, "Citations by barrier class"));
    doc.charts.forEach((chart, index) => {
      if (chart.kind === "stacked_bars") {
        charts.appendChild(this.renderStacked(chart, index));
      }
    });
    charts.appendChild(el("h2", undefined, "Reflection bands × barrier class"));
    doc.charts.forEach((chart, index) => {
      if (chart.kind === "marimekko") {
        charts.appendChild(this.renderMarimekko(chart, index));
      }
    });
    root.appendChild(charts);

    this.drilldownPanel = el("section", "drilldown");
    this.drilldownPanel.id = "drilldown";
    this.drilldownPanel.appendChild(el("h2", undefined, "Drill-down"));
    this.drilldownPanel.appendChild(
      el("p", "empty-state", "Click a chart segment to list the citations behind it."),
    );
    root.appendChild(this.drilldownPanel);

    root.appendChild(this.renderWebstruct(doc));
    root.appendChild(this.renderAnswerStats(doc));
  }

  private renderProvenance(doc: ReportDocument): HTMLElement {
    const section = el("section", "provenance");
    section.appendChild(el("h2", undefined, `Run ${doc.run_id}`));
    const line = el("p", "provenance-line");
    line.append(
      "document version ",
      num(doc.version, "report", "/version"),
      ` · format ${doc.format}`,
      " · seed ",
      num(doc.provenance.seed, "report", "/provenance/seed"),
      ` · embeddings ${doc.provenance.embedding_backend}`,
      ` · config ${doc.provenance.config_digest.slice(0, 12)}…`,
      ` · decisions ${doc.provenance.decisions_digest.slice(0, 12)}…`,
    );
    section.appendChild(line);
    return section;
  }

  // ── Stacked bars ──────────────────────────────────────────────────────

  private renderStacked(chart: StackedChart, chartIndex: number): HTMLElement {
    const block = el("div", "chart-block");
    block.appendChild(el("h3", undefined, `${chart.country} — share of citations per party × provider`));
    block.appendChild(this.renderLegend(chart.classes));

    const width = chart.bars.length * (BAR_WIDTH + BAR_GAP) + GROUP_GAP * 8 + 40;
    const root = svg("svg", {
      width,
      height: PLOT_HEIGHT + 50,
      role: "img",
      class: "stacked-bars",
    });

    let x = 30;
    let previousParty = "";
    chart.bars.forEach((bar, barIndex) => {
      if (bar.party !== previousParty && previousParty !== "") x += GROUP_GAP;
      if (bar.party !== previousParty) {
        const label = svg("text", {
          x: x + BAR_WIDTH,
          y: PLOT_HEIGHT + 28,
          "text-anchor": "middle",
          class: "party-label",
        });
        label.textContent = bar.party;
        root.appendChild(label);
        previousParty = bar.party;
      }
      const providerTick = svg("text", {
        x: x + BAR_WIDTH / 2,
        y: PLOT_HEIGHT + 12,
        "text-anchor": "middle",
        class: "provider-label",
      });
      providerTick.textContent = bar.provider.slice(0, 1);
      root.appendChild(providerTick);

      let yTop = PLOT_HEIGHT;
      for (const cls of chart.classes) {
        const proportion = bar.segments[cls] ?? 0;
        const height = proportion * PLOT_HEIGHT;
        yTop -= height;
        const rect = svg("rect", {
          x,
          y: yTop,
          width: BAR_WIDTH,
          height,
          fill: CLASS_COLORS[cls] ?? "#888",
          class: "segment",
        });
        rect.dataset.country = chart.country;
        rect.dataset.party = bar.party;
        rect.dataset.provider = bar.provider;
        rect.dataset.barrier = cls;
        this.wireStackedSegment(rect, chart, chartIndex, barIndex, cls);
        root.appendChild(rect);
      }
      x += BAR_WIDTH + BAR_GAP;
    });

    block.appendChild(root);
    return block;
  }

  private wireStackedSegment(
    rect: SVGRectElement,
    chart: StackedChart,
    chartIndex: number,
    barIndex: number,
    cls: string,
  ): void {
    const bar = chart.bars[barIndex];
    const base = `/charts/${chartIndex}/bars/${barIndex}`;
    rect.addEventListener("mouseenter", () => {
      const body = el("div");
      body.appendChild(el("strong", undefined, `${bar.party} × ${bar.provider} — ${cls}`));
      const share = el("p");
      if (cls in bar.segments) {
        share.append("proportion ", num(bar.segments[cls], "report", `${base}/segments/${cls}`));
      } else {
        // The document carries no share for this class; show the absence
        // rather than inventing a number.
        share.append("proportion — (not in this bar)");
      }
      body.appendChild(share);
      const total = el("p");
      total.append("bar total ", num(bar.total, "report", `${base}/total`), " citations");
      body.appendChild(total);
      if (bar.excluded_pending > 0) {
        const pending = el("p");
        pending.append(
          "excluded pending ",
          num(bar.excluded_pending, "report", `${base}/excluded_pending`),
        );
        body.appendChild(pending);
      }
      this.showTooltip(body);
    });
    rect.addEventListener("mouseleave", () => this.hideTooltip());
    rect.addEventListener("click", () => {
      const doc = this.document!;
      const tableIndex = doc.proportions.findIndex(
        (t) =>
          t.country === chart.country && t.provider === bar.provider && t.party === bar.party,
      );
      const countRef: CountRef | null =
        tableIndex >= 0 && cls in doc.proportions[tableIndex].counts
          ? {
              path: `/proportions/${tableIndex}/counts/${cls}`,
              value: doc.proportions[tableIndex].counts[cls],
            }
          : null;
      void this.openDrilldown(
        `${chart.country} · ${bar.party} · ${bar.provider} · ${cls}`,
        { country: chart.country, provider: bar.provider, party: bar.party, barrier: cls },
        countRef,
      );
    });
  }

  // ── Marimekko ─────────────────────────────────────────────────────────

  private renderMarimekko(chart: MarimekkoChart, chartIndex: number): HTMLElement {
    const block = el("div", "chart-block");
    block.appendChild(
      el("h3", undefined, `${chart.country} × ${chart.provider} — reflection bands`),
    );
    block.appendChild(this.renderLegend(chart.classes));

    const root = svg("svg", {
      width: MOSAIC_WIDTH,
      height: MOSAIC_HEIGHT + 30,
      role: "img",
      class: "marimekko",
    });

    let x = 0;
    chart.columns.forEach((column, columnIndex) => {
      const width = column.width * MOSAIC_WIDTH;
      let yTop = MOSAIC_HEIGHT;
      for (const cls of chart.classes) {
        const proportion = column.segments[cls] ?? 0;
        const height = proportion * MOSAIC_HEIGHT;
        yTop -= height;
        const rect = svg("rect", {
          x,
          y: yTop,
          width: Math.max(width - 2, 0),
          height,
          fill: CLASS_COLORS[cls] ?? "#888",
          class: "segment",
        });
        rect.dataset.country = chart.country;
        rect.dataset.provider = chart.provider;
        rect.dataset.band = column.band;
        rect.dataset.barrier = cls;
        this.wireMosaicSegment(rect, chart, chartIndex, columnIndex, cls);
        root.appendChild(rect);
      }
      const label = svg("text", {
        x: x + width / 2,
        y: MOSAIC_HEIGHT + 18,
        "text-anchor": "middle",
        class: "band-label",
      });
      label.textContent = column.band;
      root.appendChild(label);
      x += width;
    });
    block.appendChild(root);

    const matrixIndex = this.matrixIndex(chart);
    const caption = el("p", "mosaic-caption");
    caption.append("included ", num(chart.included_total, "report", `/charts/${chartIndex}/included_total`));
    caption.append(
      " · unavailable ",
      num(chart.excluded_unavailable, "report", `/charts/${chartIndex}/excluded_unavailable`),
    );
    caption.append(
      " · pending ",
      num(chart.excluded_pending, "report", `/charts/${chartIndex}/excluded_pending`),
    );
    if (matrixIndex >= 0) {
      const matrix = this.document!.band_matrices[matrixIndex];
      for (const column of chart.columns) {
        caption.append(
          ` · ${column.band}-band total `,
          num(matrix.band_totals[column.band] ?? 0, "report", `/band_matrices/${matrixIndex}/band_totals/${column.band}`),
        );
      }
    }
    block.appendChild(caption);
    return block;
  }

  private matrixIndex(chart: MarimekkoChart): number {
    const doc = this.document;
    if (!doc) return -1;
    return doc.band_matrices.findIndex(
      (m: BandMatrix) => m.country === chart.country && m.provider === chart.provider,
    );
  }

  private wireMosaicSegment(
    rect: SVGRectElement,
    chart: MarimekkoChart,
    chartIndex: number,
    columnIndex: number,
    cls: string,
  ): void {
    const column = chart.columns[columnIndex];
    const base = `/charts/${chartIndex}/columns/${columnIndex}`;
    rect.addEventListener("mouseenter", () => {
      const body = el("div");
      body.appendChild(
        el("strong", undefined, `${chart.country} × ${chart.provider} — ${column.band} band, ${cls}`),
      );
      const share = el("p");
      if (cls in column.segments) {
        share.append(
          "proportion within band ",
          num(column.segments[cls], "report", `${base}/segments/${cls}`),
        );
      } else {
        share.append("proportion — (band is empty)");
      }
      body.appendChild(share);
      const count = el("p");
      count.append("band count ", num(column.count, "report", `${base}/count`), " citations");
      body.appendChild(count);
      this.showTooltip(body);
    });
    rect.addEventListener("mouseleave", () => this.hideTooltip());
    rect.addEventListener("click", () => {
      const matrixIndex = this.matrixIndex(chart);
      const bandCounts =
        matrixIndex >= 0 ? this.document!.band_matrices[matrixIndex].counts[column.band] : undefined;
      const countRef: CountRef | null =
        bandCounts !== undefined && cls in bandCounts
          ? {
              path: `/band_matrices/${matrixIndex}/counts/${column.band}/${cls}`,
              value: bandCounts[cls],
            }
          : null;
      void this.openDrilldown(
        `${chart.country} · ${chart.provider} · ${column.band} band · ${cls}`,
        { country: chart.country, provider: chart.provider, band: column.band, barrier: cls },
        countRef,
      );
    });
  }

  private renderLegend(classes: string[]): HTMLElement {
    const legend = el("div", "legend");
    for (const cls of classes) {
      const chip = el("span", "legend-chip", cls);
      chip.style.borderColor = CLASS_COLORS[cls] ?? "#888";
      legend.appendChild(chip);
    }
    return legend;
  }

  // ── Drill-down ────────────────────────────────────────────────────────

  async openDrilldown(
    title: string,
    filters: CitationFilters,
    countRef: CountRef | null,
  ): Promise<void> {
    const panel = this.drilldownPanel;
    if (!panel) return;
    this.lastDrilldown = null;
    clear(panel);
    panel.appendChild(el("h2", undefined, "Drill-down"));
    panel.appendChild(el("h3", undefined, title));
    if (countRef) {
      const line = el("p", "drilldown-count");
      line.append("Citations in this segment (report count): ");
      line.append(num(countRef.value, "report", countRef.path));
      panel.appendChild(line);
    }

    let rows: CitationRow[];
    try {
      rows = await this.api.getCitations(this.runId, filters);
    } catch (error) {
      this.lastDrilldown = null;
      const detail = error instanceof ApiError ? error.detail : String(error);
      panel.appendChild(el("p", "error", `citations unavailable: ${detail}`));
      return;
    }
    this.lastDrilldown = rows;

    if (rows.length === 0) {
      panel.appendChild(el("p", "empty-state", "No citations behind this segment."));
      return;
    }

    const table = el("table", "citations-table");
    const head = el("tr");
    for (const column of [
      "question",
      "repeat",
      "url",
      "origin",
      "category",
      "sim_max",
      "band",
      "sentence pair",
      "cross-language",
    ]) {
      head.appendChild(el("th", undefined, column));
    }
    table.appendChild(head);

    rows.forEach((row, index) => {
      const tr = el("tr", "citation-row");
      tr.appendChild(el("td", undefined, row.question_id));
      const repeat = el("td");
      repeat.appendChild(num(row.repeat_index, "citations", `/${index}/repeat_index`));
      tr.appendChild(repeat);
      const urlCell = el("td", "url-cell");
      const link = el("a", undefined, row.url);
      link.href = row.url;
      link.target = "_blank";
      link.rel = "noopener";
      urlCell.appendChild(link);
      tr.appendChild(urlCell);
      tr.appendChild(el("td", undefined, row.origin ?? "pending"));
      tr.appendChild(el("td", undefined, row.category ?? "—"));
      const sim = el("td");
      if (row.sim_max === null) {
        sim.textContent = "—";
      } else {
        sim.appendChild(num(row.sim_max, "citations", `/${index}/sim_max`));
      }
      tr.appendChild(sim);
      tr.appendChild(el("td", undefined, row.band ?? "—"));
      const pair = el("td", "sentence-pair");
      if (row.answer_sentence_index === null || row.citation_sentence_index === null) {
        pair.textContent = "—";
      } else {
        pair.append(
          "answer ",
          num(row.answer_sentence_index, "citations", `/${index}/answer_sentence_index`),
          " ↔ cited ",
          num(row.citation_sentence_index, "citations", `/${index}/citation_sentence_index`),
        );
      }
      tr.appendChild(pair);
      tr.appendChild(el("td", undefined, row.cross_language === null ? "—" : row.cross_language ? "yes" : "no"));
      table.appendChild(tr);
    });
    panel.appendChild(table);
  }

  // ── Web-structure tests ───────────────────────────────────────────────

  private renderWebstruct(doc: ReportDocument): HTMLElement {
    const section = el("section", "webstruct");
    section.appendChild(el("h2", undefined, "Web-structure rank tests (cited vs. other)"));
    doc.webstruct.forEach((table, tableIndex) => {
      section.appendChild(this.renderWebstructTable(table, tableIndex));
    });
    return section;
  }

  private renderWebstructTable(table: WebstructTable, tableIndex: number): HTMLElement {
    const block = el("div", "webstruct-block");
    block.appendChild(el("h3", undefined, `${table.country} × ${table.provider}`));
    if (table.skipped) {
      block.appendChild(el("p", "empty-state", `skipped: ${table.reason ?? "(no reason)"}`));
      return block;
    }
    const base = `/webstruct/${tableIndex}`;
    const sizes = el("p", "webstruct-sizes");
    sizes.append("cited ", num(table.n_cited, "report", `${base}/n_cited`));
    sizes.append(" of ", num(table.n_cited_raw, "report", `${base}/n_cited_raw`));
    sizes.append(" · other ", num(table.n_other, "report", `${base}/n_other`));
    sizes.append(" of ", num(table.n_other_raw, "report", `${base}/n_other_raw`));
    sizes.append(" · seed ", num(table.seed, "report", `${base}/seed`));
    block.appendChild(sizes);

    const grid = el("table", "webstruct-table");
    const head = el("tr");
    for (const column of ["metric", "MW U", "MW p", "", "KS D", "KS p", ""]) {
      head.appendChild(el("th", undefined, column));
    }
    grid.appendChild(head);
    table.metrics.forEach((metric, metricIndex) => {
      const metricBase = `${base}/metrics/${metricIndex}`;
      const tr = el("tr");
      tr.appendChild(el("td", undefined, metric.metric));
      const mwStat = el("td");
      mwStat.appendChild(num(metric.mw.statistic, "report", `${metricBase}/mw/statistic`));
      tr.appendChild(mwStat);
      const mwP = el("td");
      mwP.appendChild(num(metric.mw.p_value, "report", `${metricBase}/mw/p_value`));
      tr.appendChild(mwP);
      tr.appendChild(el("td", "stars", metric.mw.stars));
      const ksStat = el("td");
      ksStat.appendChild(num(metric.ks.statistic, "report", `${metricBase}/ks/statistic`));
      tr.appendChild(ksStat);
      const ksP = el("td");
      ksP.appendChild(num(metric.ks.p_value, "report", `${metricBase}/ks/p_value`));
      tr.appendChild(ksP);
      tr.appendChild(el("td", "stars", metric.ks.stars));
      grid.appendChild(tr);
    });
    block.appendChild(grid);
    return block;
  }

  // ── Answer statistics ─────────────────────────────────────────────────

  private renderAnswerStats(doc: ReportDocument): HTMLElement {
    const section = el("section", "answer-stats");
    section.appendChild(el("h2", undefined, "Answer statistics"));
    const table = el("table", "stats-table");
    const head = el("tr");
    for (const column of [
      "country",
      "party",
      "provider",
      "answers",
      "sentences μ/med/σ",
      "citations μ/med/σ",
      "unique μ/med/σ",
      "Sent./Cit.",
      "per-answer mean",
    ]) {
      head.appendChild(el("th", undefined, column));
    }
    table.appendChild(head);
    doc.answer_stats.forEach((row, rowIndex) => {
      const base = `/answer_stats/${rowIndex}`;
      const tr = el("tr");
      tr.appendChild(el("td", undefined, row.country));
      tr.appendChild(el("td", undefined, row.party));
      tr.appendChild(el("td", undefined, row.provider));
      const answers = el("td");
      answers.appendChild(num(row.n_answers, "report", `${base}/n_answers`));
      tr.appendChild(answers);
      for (const group of ["sentences", "citations", "unique"] as const) {
        const cell = el("td", "moments");
        cell.appendChild(num(row[group].mean, "report", `${base}/${group}/mean`));
        cell.append(" / ");
        cell.appendChild(num(row[group].median, "report", `${base}/${group}/median`));
        cell.append(" / ");
        cell.appendChild(num(row[group].std, "report", `${base}/${group}/std`));
        tr.appendChild(cell);
      }
      const spc = el("td");
      spc.appendChild(num(row.sent_per_cit, "report", `${base}/sent_per_cit`));
      tr.appendChild(spc);
      const spcMean = el("td");
      spcMean.appendChild(
        num(row.sent_per_cit_answer_mean, "report", `${base}/sent_per_cit_answer_mean`),
      );
      tr.appendChild(spcMean);
      table.appendChild(tr);
    });
    section.appendChild(table);
    return section;
  }

  // ── Tooltip ───────────────────────────────────────────────────────────

  private showTooltip(body: HTMLElement): void {
    const tooltip = this.tooltip;
    if (!tooltip) return;
    clear(tooltip);
    tooltip.appendChild(body);
    tooltip.classList.remove("hidden");
  }

  private hideTooltip(): void {
    const tooltip = this.tooltip;
    if (!tooltip) return;
    tooltip.classList.add("hidden");
  }
}
