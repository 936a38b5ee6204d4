/**
 * Collapse never-fixated word runs into "[...]" placeholders, same
 * semantics as the engine: maximal runs of >= threshold non-fixated words
 * become one ellipsis; Infinity disables collapsing.
 */
import { colorFor } from "./color.js";
import type { ColorAssignment, ColorScaleConfig, PageWord } from "./types.js";

export type Segment =
  | { kind: "word"; wordId: number; color: ColorAssignment }
  | { kind: "ellipsis"; hiddenCount: number };

export function collapseRuns(
  words: PageWord[],
  totals: Map<number, number>,
  hideThreshold: number,
  cfg?: ColorScaleConfig,
): Segment[] {
  if (hideThreshold !== Infinity && hideThreshold < 1) {
    throw new Error("hideThreshold must be >= 1 (or Infinity to disable)");
  }
  const segments: Segment[] = [];
  let runStart = 0;
  let run = 0;

  const flush = () => {
    if (run === 0) return;
    if (run >= hideThreshold) {
      segments.push({ kind: "ellipsis", hiddenCount: run });
    } else {
      for (let off = 0; off < run; off++) {
        segments.push({
          kind: "word",
          wordId: runStart + off,
          color: { category: "none", heat_fraction: null },
        });
      }
    }
    run = 0;
  };

  for (const w of words) {
    const total = totals.get(w.word_id) ?? 0;
    if (total <= 0) {
      if (run === 0) runStart = w.word_id;
      run += 1;
    } else {
      flush();
      segments.push({ kind: "word", wordId: w.word_id, color: colorFor(total, cfg) });
    }
  }
  flush();
  return segments;
}

/** Sum of per-word totals over several sessions (merged-view check). */
export function sumTotals(perSession: Map<number, number>[]): Map<number, number> {
  const out = new Map<number, number>();
  for (const totals of perSession) {
    for (const [wordId, ms] of totals) {
      out.set(wordId, (out.get(wordId) ?? 0) + ms);
    }
  }
  return out;
}
