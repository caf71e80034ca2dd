/**
 * Application shell: run picker, Report / Queue tabs, and view wiring.
 *
 * The shell is built entirely in code (buildShell) so the static
 * index.html stays a bare mount point and tests drive exactly what a
 * browser would show.  The UI is read-only except adjudication.
 */

import { ReviewApi } from "./api.js";
import { clear, el } from "./render.js";
import { QueueView } from "./queueView.js";
import { ReportView } from "./reportView.js";

export interface Shell {
  runPicker: HTMLSelectElement;
  queueBadge: HTMLElement;
  reportSection: HTMLElement;
  queueSection: HTMLElement;
  reportTab: HTMLButtonElement;
  queueTab: HTMLButtonElement;
  status: HTMLElement;
}

export function buildShell(root: HTMLElement): Shell {
  clear(root);
  const header = el("header", "app-header");
  header.appendChild(el("h1", undefined, "Citation audit review"));

  const runPicker = el("select", "run-picker");
  runPicker.id = "run-picker";
  header.appendChild(runPicker);

  const tabs = el("nav", "tabs");
  const reportTab = el("button", "tab active", "Report");
  reportTab.id = "tab-report";
  const queueTab = el("button", "tab", "Queue");
  queueTab.id = "tab-queue";
  const queueBadge = el("span", "badge", "0");
  queueBadge.id = "queue-badge";
  queueTab.appendChild(queueBadge);
  tabs.appendChild(reportTab);
  tabs.appendChild(queueTab);
  header.appendChild(tabs);

  const status = el("p", "status");
  status.id = "status";
  header.appendChild(status);
  root.appendChild(header);

  const reportSection = el("main", "view");
  reportSection.id = "report-view";
  const queueSection = el("main", "view hidden");
  queueSection.id = "queue-view";
  root.appendChild(reportSection);
  root.appendChild(queueSection);

  return { runPicker, queueBadge, reportSection, queueSection, reportTab, queueTab, status };
}

export class App {
  report: ReportView | null = null;
  queue: QueueView | null = null;
  private shell: Shell | null = null;

  constructor(
    private readonly api: ReviewApi,
    private readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    const shell = buildShell(this.root);
    this.shell = shell;

    shell.reportTab.addEventListener("click", () => this.showTab("report"));
    shell.queueTab.addEventListener("click", () => this.showTab("queue"));

    let runs;
    try {
      runs = await this.api.listRuns();
    } catch (error) {
      shell.status.textContent = `cannot reach the review API: ${String(error)}`;
      return;
    }
    if (runs.length === 0) {
      shell.status.textContent = "the store has no runs yet";
      return;
    }
    for (const run of runs) {
      const option = el("option", undefined, `${run.run_id} (${run.created_at})`);
      option.value = run.run_id;
      shell.runPicker.appendChild(option);
    }
    const runId = runs[0].run_id;
    shell.runPicker.value = runId;
    shell.runPicker.addEventListener("change", () => void this.openRun(shell.runPicker.value));
    await this.openRun(runId);
  }

  async openRun(runId: string): Promise<void> {
    const shell = this.shell;
    if (!shell) return;
    shell.status.textContent = "";

    this.report = new ReportView(this.api, runId);
    this.report.mount(shell.reportSection);
    this.queue = new QueueView(this.api, runId);
    this.queue.mount(shell.queueSection);
    this.queue.onQueueChanged = (pending) => {
      shell.queueBadge.textContent = String(pending);
    };

    try {
      await this.report.load();
    } catch (error) {
      shell.status.textContent = `report unavailable: ${String(error)}`;
    }
    try {
      await this.queue.load();
    } catch (error) {
      shell.status.textContent = `queue unavailable: ${String(error)}`;
    }
  }

  showTab(name: "report" | "queue"): void {
    const shell = this.shell;
    if (!shell) return;
    const showReport = name === "report";
    shell.reportSection.classList.toggle("hidden", !showReport);
    shell.queueSection.classList.toggle("hidden", showReport);
    shell.reportTab.classList.toggle("active", showReport);
    shell.queueTab.classList.toggle("active", !showReport);
  }
}

/** Browser entry point: mount on #app against the same-origin API. */
export function main(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const app = new App(new ReviewApi(""), root);
  void app.start();
}
