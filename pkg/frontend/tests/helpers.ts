/**
 * Test harness: real stores, a real API server, and a DOM walker.
 *
 * The UI under test talks to the same process an operator would run —
 * `geaudit serve` over a store built by the public CLI — so every test
 * here exercises the HTTP boundary, not internals.
 */

import { execFileSync, spawn, ChildProcess } from "node:child_process";
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { expect } from "vitest";

import { resolvePointer } from "../src/render.js";

export const REPO = resolve(dirname(fileURLToPath(import.meta.url)), "..", "..");
export const DEMO = join(REPO, "demo");
export const GOLDEN_REPORT = join(DEMO, "golden", "report.json");

export function cli(...args: string[]): string {
  return execFileSync("python3", ["-m", "geaudit.cli", ...args], {
    cwd: REPO,
    encoding: "utf-8",
    stdio: ["ignore", "pipe", "pipe"],
  });
}

/** The demo corpus run through every stage; reproduces the golden report. */
export function buildGoldenStore(tmp: string): { store: string; config: string } {
  const store = join(tmp, "store");
  const config = join(DEMO, "audit.yaml");
  cli("init", "--config", config, "--store", store);
  cli("collect", "--config", config, "--store", store);
  cli("classify", "--config", config, "--store", store);
  cli("reflect", "--config", config, "--store", store, "--pages", join(DEMO, "pages.jsonl"));
  cli("analyze", "--config", config, "--store", store);
  return { store, config };
}

/**
 * The same corpus with an empty decisions file: the two judge
 * disagreements stay pending, and decisions posted by the UI land in a
 * scratch file instead of the committed one.
 */
export function buildPendingStore(tmp: string): { store: string; config: string } {
  const dir = join(tmp, "pending");
  mkdirSync(dir, { recursive: true });
  const decisions = join(dir, "decisions.jsonl");
  writeFileSync(decisions, "");
  const config = join(dir, "audit.yaml");
  const base = readFileSync(join(DEMO, "audit.yaml"), "utf-8");
  const patched = base
    .replace(/^run_id: .*$/m, "run_id: roundtrip-2024")
    .replace(/table_path: judges\//g, `table_path: ${DEMO}/judges/`)
    .replace(/^- raw\//gm, `- ${DEMO}/raw/`)
    .replace(/^decisions_file: .*$/m, `decisions_file: ${decisions}`);
  writeFileSync(config, patched);

  const store = join(dir, "store");
  cli("init", "--config", config, "--store", store);
  cli("collect", "--config", config, "--store", store);
  cli("classify", "--config", config, "--store", store, "--allow-pending");
  cli("reflect", "--config", config, "--store", store, "--pages", join(DEMO, "pages.jsonl"));
  cli("analyze", "--config", config, "--store", store, "--allow-pending");
  return { store, config };
}

export interface ServerHandle {
  baseUrl: string;
  stop: () => Promise<void>;
  logs: () => string;
}

export async function startServer(
  config: string,
  store: string,
  port: number,
  uiDir?: string,
): Promise<ServerHandle> {
  const args = [
    "-m",
    "geaudit.cli",
    "serve",
    "--config",
    config,
    "--store",
    store,
    "--bind",
    `127.0.0.1:${port}`,
  ];
  if (uiDir) args.push("--ui", uiDir);
  const proc: ChildProcess = spawn("python3", args, { cwd: REPO, stdio: ["ignore", "pipe", "pipe"] });
  let captured = "";
  proc.stdout?.on("data", (chunk) => (captured += String(chunk)));
  proc.stderr?.on("data", (chunk) => (captured += String(chunk)));
  const exited = new Promise<void>((resolveExit) => proc.on("exit", () => resolveExit()));

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const response = await fetch(`${baseUrl}/v1/runs`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      proc.kill("SIGKILL");
      throw new Error(`server on :${port} never came up\n${captured}`);
    }
    await sleep(200);
  }

  return {
    baseUrl,
    logs: () => captured,
    stop: async () => {
      proc.kill("SIGTERM");
      await Promise.race([exited, sleep(5_000).then(() => proc.kill("SIGKILL"))]);
    },
  };
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolveSleep) => setTimeout(resolveSleep, ms));
}

/** Poll until `probe` returns true; fail loudly with `what` otherwise. */
export async function until(what: string, probe: () => boolean, timeoutMs = 15_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!probe()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(25);
  }
}

export interface WalkDocs {
  report: unknown;
  citations?: unknown;
}

/**
 * The DOM-vs-document comparison: every element stamped by render.num()
 * must carry a value byte-equal to the field its pointer names, and show
 * exactly that value as text.  Returns how many numbers were checked.
 */
export function walkNumbers(scope: Element, docs: WalkDocs): number {
  const nodes = scope.querySelectorAll<HTMLElement>("[data-path]");
  let checked = 0;
  for (const node of nodes) {
    const docName = node.dataset.doc as keyof WalkDocs | undefined;
    expect(docName, `data-doc on ${node.outerHTML}`).toBeDefined();
    const doc = docs[docName!];
    expect(doc, `document ${String(docName)} supplied for ${node.dataset.path}`).toBeDefined();
    const value = resolvePointer(doc, node.dataset.path!);
    expect(typeof value, `${String(docName)}:${node.dataset.path} resolves`).toBe("number");
    expect(JSON.stringify(value)).toBe(node.dataset.value);
    expect(node.textContent).toBe(String(value));
    checked += 1;
  }
  return checked;
}

export function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  root.id = "app";
  document.body.appendChild(root);
  return root;
}

export function fire(target: Element, type: string): void {
  target.dispatchEvent(new Event(type, { bubbles: true }));
}
