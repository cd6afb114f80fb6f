// Records as the workbench service returns them; field names and shapes
// mirror the JSON exactly.

export type Decision = "keep" | "ban";

export interface TrigramRow {
  relation: string;
  trigram: string[];
  value: number;
  count: number;
  samples: string[];
}

export interface SampleSentence {
  id: string;
  tokens: string[];
  window: number;
  e1: [number, number];
  e2: [number, number];
  label: string | null;
}

export interface Verdict {
  relation: string;
  trigram: string[];
  decision: Decision;
  reviewer: string;
  timestamp: string;
}

export interface VerdictsPayload {
  round: number | null;
  verdicts: Verdict[];
}

export interface ClassMetrics {
  precision: number;
  recall: number;
  f1: number;
  support: number;
}

export interface MetricsReport {
  per_class: Record<string, ClassMetrics>;
  macro_precision: number;
  macro_recall: number;
  macro_f1: number;
  confusion: Record<string, Record<string, number>>;
  num_examples: number;
}

export type BannedEntry = [string, string[]];

export interface RoundRecord {
  index: number;
  banned_new: BannedEntry[];
  banned_cumulative: BannedEntry[];
  sizes_before: Record<string, number>;
  sizes_after: Record<string, number>;
  removed_per_relation: Record<string, number>;
  metrics: MetricsReport;
  previous_metrics: MetricsReport | null;
  elapsed_sec: number;
  created: string;
}

export interface WorkspaceSummary {
  id: string;
  created: string | null;
  rounds: number;
  state: string;
  relations: string[];
}

export type WorkspaceState = "idle" | "training" | "failed";

export interface StatusPayload {
  state: WorkspaceState;
  rounds: number;
  current_round: number | null;
  progress?: { epoch: number; total_epochs: number };
  reason?: string;
}
