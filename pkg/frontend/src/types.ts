// Scores are a closed five-value type: the UI cannot construct anything else.
export type Score = 1 | 2 | 3 | 4 | 5;
export const SCORES: readonly Score[] = [1, 2, 3, 4, 5];

export function asScore(value: number): Score | null {
  return value === 1 || value === 2 || value === 3 || value === 4 || value === 5
    ? value
    : null;
}

export interface Progress {
  scored: number;
  total: number;
}

// Blind-review payload: the server never sends the ground-truth label or
// the model's yes/no outcome, only the justification text and clip refs.
export interface NextSample {
  sample_id: string;
  feature_id: string;
  feature_name: string;
  justification: string;
  clip_url: string;
  media_url: string;
  progress: Progress;
}

export interface ScoreAck {
  status: string;
  overwrite: boolean;
}

export interface SummaryPayload {
  feature_id: string | null;
  histogram: Record<string, number>;
  median: number | null;
  proportion_ge_3: number | null;
  count: number;
}

export interface MediaInfo {
  video_id: string;
  duration_s: number;
  start_s: number;
  end_s: number;
  frame_interval_s: number;
}

export interface PendingScore {
  sample_id: string;
  reviewer_id: string;
  score: Score;
}
