/**
 * Extractor self-test over a 20-page corpus: every emitted snapshot must
 * satisfy the loader invariants — including the text-reconstruction rule
 * — and actually load in the engine (validated via the Python loader).
 */
import { execFileSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { JSDOM } from "jsdom";
import { afterAll, describe, expect, it } from "vitest";

import { extractSnapshot, reconstructionHolds, type SnapshotDocument } from "../extractor/core.js";
import { SyntheticLayout } from "../extractor/synthetic.js";
import { buildCorpus } from "./corpus.js";

const VIEWPORT = 900;

function extract(html: string, stimulusId: string): ReturnType<typeof extractSnapshot> {
  const dom = new JSDOM(html);
  const doc = dom.window.document;
  return extractSnapshot(doc, new SyntheticLayout(doc, VIEWPORT), {
    stimulusId,
    url: `https://corpus.example/${stimulusId}`,
    viewportWidthPx: VIEWPORT,
  });
}

const corpus = buildCorpus(20);
const extracted = corpus.map((page) => ({
  page,
  result: extract(page.html, page.name),
}));

describe("snapshot invariants over the corpus", () => {
  it("extracts words from every page", () => {
    for (const { page, result } of extracted) {
      expect(result.snapshot.words.length, page.name).toBeGreaterThan(20);
    }
  });

  it("reconstructs the whitespace-normalized page text", () => {
    for (const { page, result } of extracted) {
      expect(reconstructionHolds(result.snapshot), page.name).toBe(true);
    }
  });

  it("keeps char ranges increasing, disjoint, and slice-consistent", () => {
    for (const { result } of extracted) {
      const { page_text, words } = result.snapshot;
      let prevEnd = -1;
      for (const w of words) {
        expect(w.char_start).toBeGreaterThan(prevEnd - 1);
        expect(w.char_end - w.char_start).toBe(w.text.length);
        expect(page_text.slice(w.char_start, w.char_end)).toBe(w.text);
        expect(/\s/.test(w.text)).toBe(false);
        expect(w.w).toBeGreaterThan(0);
        expect(w.h).toBeGreaterThan(0);
        prevEnd = w.char_end;
      }
    }
  });

  it("boxes stay within the page extent", () => {
    for (const { result } of extracted) {
      for (const w of result.snapshot.words) {
        expect(w.x).toBeGreaterThanOrEqual(0);
        expect(w.y).toBeGreaterThanOrEqual(0);
        expect(w.x + w.w).toBeLessThanOrEqual(VIEWPORT);
      }
    }
  });

  it("skips hidden regions and counts them", () => {
    for (const { result } of extracted) {
      expect(result.report.hidden_skipped).toBeGreaterThan(0);
      const texts = result.snapshot.words.map((w) => w.text).join(" ");
      expect(texts.includes("tracking")).toBe(false);
    }
  });

  it("splits wrapped long tokens into multiple boxes", () => {
    const withWraps = extracted.filter(({ result }) => result.report.wrapped_tokens > 0);
    expect(withWraps.length).toBe(extracted.length); // every page has the long token
  });

  it("collects ancestor ids and classes as labels", () => {
    for (const { result } of extracted) {
      const labels = new Set(result.snapshot.words.flatMap((w) => w.labels));
      expect(labels.has("title")).toBe(true);
      expect(labels.has("record")).toBe(true);
      expect(labels.has("page")).toBe(true);
      expect(labels.has("keyword")).toBe(true);
      const titleWords = result.snapshot.words.filter((w) => w.labels.includes("title"));
      expect(titleWords.length).toBeGreaterThanOrEqual(4);
    }
  });

  it("rejects a page with no visible words", () => {
    expect(() => extract("<html><body><p hidden>x</p></body></html>", "empty")).toThrow(
      /no visible words/,
    );
  });
});

describe("engine loader accepts every snapshot", () => {
  const dir = mkdtempSync(join(tmpdir(), "wg-snap-"));
  afterAll(() => rmSync(dir, { recursive: true, force: true }));

  it("python load_snapshot validates all 20 files", () => {
    const paths: string[] = [];
    for (const { page, result } of extracted) {
      const p = join(dir, `${page.name}.json`);
      writeFileSync(p, JSON.stringify(result.snapshot));
      paths.push(p);
    }
    const script = [
      "import sys",
      "from wordgaze.snapshot import load_snapshot",
      "for p in sys.argv[1:]:",
      "    snap = load_snapshot(p)",
      "    assert snap.word_count > 0, p",
      "print(f'validated {len(sys.argv) - 1} snapshots')",
    ].join("\n");
    const out = execFileSync("python3", ["-c", script, ...paths], { encoding: "utf-8" });
    expect(out).toContain("validated 20 snapshots");
  });
});

describe("large page", () => {
  it("a ~1000-word page round-trips its text", () => {
    const big = extracted[0];
    expect(big.result.snapshot.words.length).toBeGreaterThan(600);
    expect(reconstructionHolds(big.result.snapshot)).toBe(true);
  });
});
