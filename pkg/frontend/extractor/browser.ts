/**
 * Real-browser geometry provider plus an injectable extraction entry.
 *
 * Character rectangles come from Range.getClientRects translated into
 * page coordinates (scroll offsets added), which is the same text-metric
 * facility analysts' browsers use to resolve a point to a word. Run via
 * a driver (playwright/puppeteer page.evaluate) or paste into DevTools.
 */
import { extractSnapshot, type CharRect, type GeometryProvider, type SnapshotDocument } from "./core.js";

export class BrowserLayout implements GeometryProvider {
  private visibility = new Map<Element, boolean>();

  constructor(private win: Window & typeof globalThis) {}

  private visible(el: Element | null): boolean {
    if (!el) return true;
    const cached = this.visibility.get(el);
    if (cached !== undefined) return cached;
    const style = this.win.getComputedStyle(el);
    const ok =
      style.display !== "none" && style.visibility !== "hidden" && this.visible(el.parentElement);
    this.visibility.set(el, ok);
    return ok;
  }

  charRect(node: Text, index: number): CharRect | null {
    if (!this.visible(node.parentElement)) return null;
    const range = node.ownerDocument!.createRange();
    range.setStart(node, index);
    range.setEnd(node, index + 1);
    const rects = range.getClientRects();
    if (!rects.length) return null;
    const r = rects[0];
    if (r.width <= 0 || r.height <= 0) return null;
    return {
      x: r.left + this.win.scrollX,
      y: r.top + this.win.scrollY,
      w: r.width,
      h: r.height,
    };
  }
}

/**
 * Extract the current page. Evaluate this in a fully rendered page at
 * the experiment's recorded viewport width (scripts settled).
 */
export function extractCurrentPage(stimulusId: string, win: Window & typeof globalThis = window) {
  const result = extractSnapshot(win.document, new BrowserLayout(win), {
    stimulusId,
    url: win.location.href,
    viewportWidthPx: win.innerWidth,
  });
  return result;
}

export type { SnapshotDocument };
