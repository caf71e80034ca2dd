/**
 * Typed client for the review HTTP API.
 *
 * This module is the UI's only doorway to audit data: every document the
 * views render is fetched here, and the single write (adjudication
 * decisions) goes through postDecision.  Non-2xx responses become
 * ApiError with the server's own detail message, so views can show the
 * authoritative wording (e.g. which resolution won a conflict).
 */

import {
  AdjudicationItem,
  CitationFilters,
  CitationRow,
  DecisionAck,
  ReportDocument,
  RunSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText || "request failed";
  }
}

export class ReviewApi {
  constructor(private readonly baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as T;
  }

  listRuns(): Promise<RunSummary[]> {
    return this.get("/v1/runs");
  }

  getReport(runId: string): Promise<ReportDocument> {
    return this.get(`/v1/runs/${encodeURIComponent(runId)}/report`);
  }

  getQueue(runId: string): Promise<AdjudicationItem[]> {
    return this.get(`/v1/runs/${encodeURIComponent(runId)}/queue`);
  }

  getCitations(runId: string, filters: CitationFilters = {}): Promise<CitationRow[]> {
    const query = new URLSearchParams();
    for (const [field, wanted] of Object.entries(filters)) {
      if (wanted !== undefined) query.set(field, wanted);
    }
    const suffix = query.toString() ? `?${query.toString()}` : "";
    return this.get(`/v1/runs/${encodeURIComponent(runId)}/citations${suffix}`);
  }

  async postDecision(
    runId: string,
    host: string,
    category: string,
    adjudicator: string,
  ): Promise<DecisionAck> {
    const response = await fetch(
      `${this.baseUrl}/v1/runs/${encodeURIComponent(runId)}/decisions`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ host, category, adjudicator }),
      },
    );
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as DecisionAck;
  }
}
