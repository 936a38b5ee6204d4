/**
 * Deterministic layout engine for browserless extraction and tests.
 *
 * Lays the document out on a fixed-metric grid (monospace character
 * boxes, block elements stacked vertically, inline text flowing with
 * word wrap), then answers per-character rect queries like a browser
 * would. Not a pixel-faithful renderer; it exists so the extraction core
 * can run and be verified without a browser binary.
 */
import type { CharRect, GeometryProvider } from "./core.js";

export interface SyntheticMetrics {
  charW: number;
  lineH: number;
  blockGap: number;
  margin: number;
}

export const DEFAULT_METRICS: SyntheticMetrics = {
  charW: 8,
  lineH: 18,
  blockGap: 10,
  margin: 16,
};

const BLOCK_TAGS = new Set([
  "ADDRESS", "ARTICLE", "ASIDE", "BLOCKQUOTE", "DIV", "DL", "DD", "DT",
  "FIELDSET", "FIGURE", "FIGCAPTION", "FOOTER", "FORM", "H1", "H2", "H3",
  "H4", "H5", "H6", "HEADER", "HR", "LI", "MAIN", "NAV", "OL", "P",
  "PRE", "SECTION", "TABLE", "TD", "TH", "TR", "UL",
]);
const SKIP_TAGS = new Set(["SCRIPT", "STYLE", "NOSCRIPT", "TEMPLATE", "TITLE", "HEAD"]);

function isHidden(el: Element): boolean {
  if (el.hasAttribute("hidden")) return true;
  const style = el.getAttribute("style") ?? "";
  return /display\s*:\s*none|visibility\s*:\s*hidden/i.test(style);
}

export class SyntheticLayout implements GeometryProvider {
  private rects = new Map<Text, (CharRect | null)[]>();

  constructor(doc: Document, viewportWidth: number, metrics: SyntheticMetrics = DEFAULT_METRICS) {
    const { charW, lineH, blockGap, margin } = metrics;
    const maxX = Math.max(viewportWidth - margin, margin + charW);
    let x = margin;
    let y = margin;
    let lineStart = true;

    const newLine = () => {
      x = margin;
      lineStart = true;
    };
    const blockBreak = () => {
      if (!lineStart) {
        y += lineH;
        newLine();
      }
      y += blockGap;
    };

    const layoutText = (node: Text) => {
      const data = node.data;
      const out: (CharRect | null)[] = new Array(data.length).fill(null);
      let i = 0;
      while (i < data.length) {
        const ch = data[i];
        if (/\s/.test(ch)) {
          // collapse whitespace runs; no advance at line starts
          if (!lineStart) {
            x += charW;
            if (x > maxX) {
              y += lineH;
              newLine();
            }
          }
          while (i < data.length && /\s/.test(data[i])) i++;
          continue;
        }
        // word-boundary wrap: if the whole token fits on a fresh line,
        // break before it; over-long tokens wrap per character
        let end = i;
        while (end < data.length && !/\s/.test(data[end])) end++;
        const tokenW = (end - i) * charW;
        if (!lineStart && x + tokenW > maxX && margin + tokenW <= maxX) {
          y += lineH;
          newLine();
        }
        for (let k = i; k < end; k++) {
          if (x + charW > maxX && !lineStart) {
            y += lineH;
            newLine();
          }
          out[k] = { x, y, w: charW, h: lineH - 4 };
          x += charW;
          lineStart = false;
        }
        i = end;
      }
      this.rects.set(node, out);
    };

    const visit = (node: Node) => {
      if (node.nodeType === 3) {
        layoutText(node as Text);
        return;
      }
      if (node.nodeType !== 1) return;
      const el = node as Element;
      if (SKIP_TAGS.has(el.tagName) || isHidden(el)) return;
      if (el.tagName === "BR") {
        y += lineH;
        newLine();
        return;
      }
      const block = BLOCK_TAGS.has(el.tagName);
      if (block) blockBreak();
      for (const child of Array.from(el.childNodes)) visit(child);
      if (block) blockBreak();
    };

    const root = doc.body ?? doc.documentElement;
    if (root) visit(root);
  }

  charRect(node: Text, index: number): CharRect | null {
    const rects = this.rects.get(node);
    if (!rects) return null;
    return rects[index] ?? null;
  }
}
