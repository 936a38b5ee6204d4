/**
 * Page-snapshot extraction core: walk the rendered document's text nodes,
 * split them into whitespace-free words, resolve per-word page-space
 * rectangles through a geometry provider, and emit the snapshot schema
 * consumed by the engine's loader.
 *
 * Geometry is pluggable so the same core runs against a real browser's
 * text metrics (Range.getClientRects) or a deterministic synthetic layout
 * in browserless environments.
 */

export interface CharRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface GeometryProvider {
  /**
   * Rectangle of character `index` of a text node in page coordinates,
   * or null when it does not render (hidden subtree, collapsed space).
   */
  charRect(node: Text, index: number): CharRect | null;
}

export interface SnapshotWord {
  word_id: number;
  text: string;
  char_start: number;
  char_end: number;
  x: number;
  y: number;
  w: number;
  h: number;
  dom_path: string;
  labels: string[];
}

export interface SnapshotDocument {
  schema_version: 1;
  stimulus_id: string;
  url: string;
  page_text: string;
  viewport_width_px: number;
  words: SnapshotWord[];
}

export interface ExtractReport {
  words_emitted: number;
  hidden_skipped: number;
  wrapped_tokens: number;
  text_nodes_visited: number;
}

export interface ExtractOptions {
  stimulusId: string;
  url?: string;
  viewportWidthPx: number;
}

const SKIP_TAGS = new Set(["SCRIPT", "STYLE", "NOSCRIPT", "TEMPLATE", "TITLE", "HEAD"]);

function labelChain(el: Element | null): string[] {
  const labels: string[] = [];
  for (let cur = el; cur; cur = cur.parentElement) {
    if (cur.id) labels.push(cur.id);
    for (const cls of Array.from(cur.classList ?? [])) labels.push(cls);
  }
  return Array.from(new Set(labels)).sort();
}

function domPath(el: Element | null): string {
  const parts: string[] = [];
  for (let cur = el; cur; cur = cur.parentElement) {
    let part = cur.tagName.toLowerCase();
    if (cur.id) part += `#${cur.id}`;
    else if (cur.classList && cur.classList.length) part += `.${Array.from(cur.classList).join(".")}`;
    parts.push(part);
  }
  return parts.reverse().join("/");
}

function* textNodes(root: Node): Generator<Text> {
  // manual walk: document order, skipping non-content subtrees
  const stack: Node[] = [root];
  while (stack.length) {
    const node = stack.pop()!;
    if (node.nodeType === 3) {
      yield node as Text;
      continue;
    }
    if (node.nodeType === 1 && SKIP_TAGS.has((node as Element).tagName)) continue;
    const children = node.childNodes;
    for (let i = children.length - 1; i >= 0; i--) stack.push(children[i]);
  }
}

interface Fragment {
  text: string;
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/** Group a token's characters into per-line fragments by rect top. */
function fragmentsOf(node: Text, start: number, end: number, geometry: GeometryProvider): Fragment[] {
  const frags: Fragment[] = [];
  let cur: Fragment | null = null;
  let curTop = 0;
  for (let i = start; i < end; i++) {
    const r = geometry.charRect(node, i);
    if (r === null || r.w <= 0 || r.h <= 0) continue;
    const sameLine = cur !== null && Math.abs(r.y - curTop) < r.h / 2;
    if (!sameLine) {
      if (cur) frags.push(cur);
      cur = { text: "", x0: r.x, y0: r.y, x1: r.x + r.w, y1: r.y + r.h };
      curTop = r.y;
    }
    cur!.text += node.data[i];
    cur!.x0 = Math.min(cur!.x0, r.x);
    cur!.y0 = Math.min(cur!.y0, r.y);
    cur!.x1 = Math.max(cur!.x1, r.x + r.w);
    cur!.y1 = Math.max(cur!.y1, r.y + r.h);
  }
  if (cur) frags.push(cur);
  return frags;
}

const TOKEN = /\S+/g;

export function extractSnapshot(
  doc: Document,
  geometry: GeometryProvider,
  opts: ExtractOptions,
): { snapshot: SnapshotDocument; report: ExtractReport } {
  const words: SnapshotWord[] = [];
  const chunks: string[] = [];
  const report: ExtractReport = {
    words_emitted: 0,
    hidden_skipped: 0,
    wrapped_tokens: 0,
    text_nodes_visited: 0,
  };
  let offset = 0;

  const root = doc.body ?? doc.documentElement;
  if (!root) throw new Error("document has no body");

  for (const node of textNodes(root)) {
    report.text_nodes_visited += 1;
    const data = node.data;
    if (!data || !data.trim()) continue;
    const parent = node.parentElement;
    const labels = labelChain(parent);
    const path = domPath(parent);

    TOKEN.lastIndex = 0;
    let m: RegExpExecArray | null;
    while ((m = TOKEN.exec(data)) !== null) {
      const frags = fragmentsOf(node, m.index, m.index + m[0].length, geometry);
      if (frags.length === 0) {
        report.hidden_skipped += 1;
        continue;
      }
      if (frags.length > 1) report.wrapped_tokens += 1;
      for (const f of frags) {
        const w = f.x1 - f.x0;
        const h = f.y1 - f.y0;
        if (!(w > 0 && h > 0) || !f.text) {
          report.hidden_skipped += 1;
          continue;
        }
        words.push({
          word_id: words.length,
          text: f.text,
          char_start: offset,
          char_end: offset + f.text.length,
          x: f.x0,
          y: f.y0,
          w,
          h,
          dom_path: path,
          labels,
        });
        chunks.push(f.text);
        offset += f.text.length + 1;
      }
    }
  }

  if (words.length === 0) {
    throw new Error(`no visible words extracted for ${opts.stimulusId}`);
  }
  report.words_emitted = words.length;
  return {
    snapshot: {
      schema_version: 1,
      stimulus_id: opts.stimulusId,
      url: opts.url ?? doc.location?.href ?? "",
      page_text: chunks.join(" "),
      viewport_width_px: opts.viewportWidthPx,
      words,
    },
    report,
  };
}

/**
 * Extraction self-check, mirroring the engine loader's text invariant:
 * concatenated word texts must equal the whitespace-normalized page text.
 */
export function reconstructionHolds(snapshot: SnapshotDocument): boolean {
  const joined = snapshot.words.map((w) => w.text).join(" ");
  const normalized = snapshot.page_text.replace(/\s+/g, " ").trim();
  return joined === normalized;
}
