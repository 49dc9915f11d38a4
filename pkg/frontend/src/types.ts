/** Wire types matching the review service's JSON payloads. */

export type ReviewState = 'auto_accepted' | 'pending' | 'accepted' | 'rejected';

export type Decision = 'accept' | 'reject';

export interface TraceView {
  doc_id: string;
  section: string;
  page: number;
  chunk_id: string;
  excerpt: string;
}

export interface ReviewItemView {
  req_id: string;
  run_id: string;
  text: string;
  type: string;
  pegs: string;
  priority: string;
  category: string;
  confidence: number;
  contributing_providers: string[];
  state: ReviewState;
  reviewer: string | null;
  note: string | null;
  trace: TraceView;
}

export interface DecisionResult {
  req_id: string;
  state: ReviewState;
  reviewer: string | null;
  decided_at: string | null;
  note: string | null;
}

export interface RunMetrics {
  total: number;
  flagged: number;
  pending: number;
  flagged_fraction: number;
}

/** Confidence as the service reports it, fixed to three decimals. */
export function formatConfidence(value: number): string {
  return value.toFixed(3);
}
