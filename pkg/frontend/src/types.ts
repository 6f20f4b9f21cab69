/** Wire types for the review-service JSON API (see docs/api.md). */

export type HunkKind = "INSERT" | "DELETE" | "REPLACE";

export interface DiffHunk {
  /** 1-based inclusive; an empty side is [pos, pos - 1]. */
  original_range: [number, number];
  revised_range: [number, number];
  kind: HunkKind;
}

export interface HallucinationFlag {
  hunk: DiffHunk;
  nearest_issue_line: number | null;
  distance: number | null;
}

export interface Metrics {
  matched: number;
  original_lines: number;
  revised_lines: number;
  precision: string; // exact rational "p/q"
  recall: string;
  f1: string;
}

export type DecisionState = "PENDING" | "ACCEPTED" | "REJECTED" | "EDITED";

export interface ComparisonDoc {
  file_location: string;
  hunks: DiffHunk[];
  metrics: Metrics;
  flags: HallucinationFlag[];
  decision: DecisionState;
  edited_content: string | null;
  original_text: string;
  revised_text: string;
  window: number;
  issue_lines: number[];
}

export interface RunSummary {
  run_id: string;
  label: string;
  created_at: string;
  files_total: number;
  files_decided: number;
  flagged_total: number;
  pending_required: string[];
  applied: boolean;
}

export type FileStatus = "PENDING" | "ACCEPT" | "REJECT" | "EDIT";

export interface FileEntry {
  path: string;
  flag_count: number;
  hunk_count: number;
  status: FileStatus;
}

export interface RunFilesResponse {
  run_id: string;
  applied: boolean;
  review_all: boolean;
  pending_required: string[];
  files: FileEntry[];
}

export type Verdict = "ACCEPT" | "REJECT" | "EDIT";

export interface DecisionRequest {
  verdict: Verdict;
  edited_content?: string;
  note?: string;
}

export interface RunState {
  run_id: string;
  file_status: Record<string, string>;
  flagged_files: string[];
  applied: boolean;
  review_all: boolean;
  pending_required: string[];
}

export interface ApplyResponse {
  run_id: string;
  final_tree: string;
}

/** Render an exact rational like "97/100" as a percentage string. */
export function rationalToPercent(value: string, digits = 2): string {
  const [p, q] = value.split("/");
  const numerator = Number(p);
  const denominator = q === undefined ? 1 : Number(q);
  if (!Number.isFinite(numerator) || !Number.isFinite(denominator) || denominator === 0) {
    return "?";
  }
  return ((numerator / denominator) * 100).toFixed(digits) + "%";
}
