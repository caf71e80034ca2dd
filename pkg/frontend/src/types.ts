/**
 * Shapes of the documents the review API serves.
 *
 * Everything here mirrors server-built JSON verbatim; the UI never
 * derives numbers of its own from these fields, it only projects them.
 */

export type ClassKey = "primary" | "opponent" | "low" | "medium" | "high";
export type BandKey = "low" | "mid" | "high";

export const CATEGORIES = [
  "party",
  "media",
  "platform",
  "owned",
  "academia",
  "non_media_industry",
  "government",
] as const;

export interface RunSummary {
  run_id: string;
  created_at: string;
  config_digest: string;
}

export interface Provenance {
  config_digest: string;
  decisions_digest: string;
  embedding_backend: string;
  seed: number;
}

export interface ProportionTable {
  country: string;
  provider: string;
  party: string;
  counts: Record<string, number>;
  proportions: Record<string, number>;
  total: number;
  excluded_pending: number;
}

export interface StackedBar {
  party: string;
  provider: string;
  segments: Record<string, number>;
  total: number;
  excluded_pending: number;
}

export interface StackedChart {
  kind: "stacked_bars";
  country: string;
  classes: string[];
  bars: StackedBar[];
}

export interface MosaicColumn {
  band: BandKey;
  count: number;
  width: number;
  segments: Record<string, number>;
}

export interface MarimekkoChart {
  kind: "marimekko";
  country: string;
  provider: string;
  classes: string[];
  columns: MosaicColumn[];
  included_total: number;
  excluded_unavailable: number;
  excluded_pending: number;
}

export type Chart = StackedChart | MarimekkoChart;

export interface BandMatrix {
  country: string;
  provider: string;
  counts: Record<string, Record<string, number>>;
  proportions: Record<string, Record<string, number>>;
  band_totals: Record<string, number>;
  included_total: number;
  excluded_unavailable: number;
  excluded_pending: number;
}

export interface RankTest {
  statistic: number;
  p_value: number;
  n1: number;
  n2: number;
  method: string;
  degenerate: boolean;
  stars: string;
}

export interface WebstructMetric {
  metric: string;
  mw: RankTest;
  ks: RankTest;
}

export interface WebstructTable {
  country: string;
  provider: string;
  n_cited: number;
  n_other: number;
  n_cited_raw: number;
  n_other_raw: number;
  excluded_cited: number;
  excluded_other: number;
  seed: number;
  skipped: boolean;
  reason: string | null;
  metrics: WebstructMetric[];
}

export interface MomentSummary {
  mean: number;
  median: number;
  std: number;
}

export interface AnswerStatsRow {
  country: string;
  party: string;
  provider: string;
  n_answers: number;
  sentences: MomentSummary;
  citations: MomentSummary;
  unique: MomentSummary;
  sent_per_cit: number;
  sent_per_cit_answer_mean: number;
}

export interface ReportDocument {
  format: string;
  version: number;
  run_id: string;
  provenance: Provenance;
  proportions: ProportionTable[];
  band_matrices: BandMatrix[];
  charts: Chart[];
  webstruct: WebstructTable[];
  answer_stats: AnswerStatsRow[];
}

/** One judge's vote: [judge_id, category-or-null (null = judge failure)]. */
export type JudgeVote = [string, string | null];

export interface AdjudicationItem {
  host: string;
  whois_summary: string;
  votes: JudgeVote[];
  status: string;
  resolution: [string, string, string] | null;
}

export interface CitationRow {
  question_id: string;
  repeat_index: number;
  provider: string;
  party: string;
  country: string;
  citation_index: number;
  url: string;
  host: string;
  status: string;
  category: string | null;
  origin: string | null;
  barrier: string | null;
  sim_max: number | null;
  band: string | null;
  answer_sentence_index: number | null;
  citation_sentence_index: number | null;
  cross_language: boolean | null;
}

export interface CitationFilters {
  country?: string;
  provider?: string;
  party?: string;
  barrier?: string;
  band?: string;
  host?: string;
}

export interface DecisionAck {
  host: string;
  category: string;
  pending: AdjudicationItem[];
}
