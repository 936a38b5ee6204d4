/** Payload types of the wordgaze query API. */

export interface ColorScaleConfig {
  scan_max_ms: number;
  heat_min_ms: number;
  heat_max_ms: number;
  stops: [number, number, number][];
  scan_color: [number, number, number];
}

export type ColorCategory = "none" | "scan" | "heat";

export interface ColorAssignment {
  category: ColorCategory;
  /** present only for heat */
  heat_fraction: number | null;
}

export interface WordDwell {
  word_id: number;
  word: string;
  char_start: number;
  total_ms: number;
  first_seen_ms: number;
  last_seen_ms: number;
}

export interface PageWord {
  word_id: number;
  text: string;
  char_start: number;
  labels: string[];
}

export interface AoiMetrics {
  labels: string[];
  fixation_time_ms: number;
  words_fixated: number;
  chars_fixated: number;
  percent_words_fixated: number;
  word_count_in_aoi: number;
}

export interface SessionPayload {
  participant: string;
  stimulus: string;
  chrono_index: number;
  start_ms: number;
  end_ms: number;
  layout_hash: string | null;
  processed: boolean;
  visitors: number;
  annotation: Record<string, unknown> | null;
  aoi_word_ids: number[] | null;
  metrics: AoiMetrics | null;
  words?: WordDwell[];
  page?: {
    url: string;
    viewport_width_px: number;
    word_count: number;
    words: PageWord[];
  };
}

export interface ParticipantDwell {
  total_ms: number;
  first_seen_ms: number;
  last_seen_ms: number;
}

export interface MergedWord {
  word_id: number;
  word: string;
  char_start: number;
  total_ms: number;
  contributors: number;
  per_participant: Record<string, ParticipantDwell>;
}

export interface MergedPayload {
  stimulus: string;
  base_layout_hash: string;
  contributors: number;
  metrics: AoiMetrics | null;
  words: MergedWord[];
  unmatched: ({ participant: string } & WordDwell)[];
}

export interface StimulusInfo {
  stimulus: string;
  visitors: number;
}

export interface LabelInfo {
  label: string;
  words: number;
}

export interface TableRow {
  participant: string;
  stimulus: string;
  chrono_index: number;
  aoi_labels: string;
  fixation_time_ms: number;
  words_fixated: number;
  chars_fixated: number;
  percent_words_fixated: number;
  word_count_in_aoi: number;
  [annotation: string]: unknown;
}

export interface QueryFilterState {
  participants: string[] | null;
  stimuli: string[] | null;
  aoi: string[] | null;
  aoiMode: "any" | "all";
  merged: boolean;
}
