/**
 * Analyst workbench: filter menu, coloring/collapse sliders, per-session
 * stimulus views in task order, merged multi-participant view, data
 * table, and CSV export. Strictly read-only over the query API; slider
 * changes re-render from cached payloads without server round-trips.
 */
import { WorkspaceClient, emptyFilter } from "./api.js";
import { colorFor, cssColor, scaleFromSliders } from "./color.js";
import { collapseRuns } from "./collapse.js";
import type {
  MergedPayload,
  QueryFilterState,
  SessionPayload,
  TableRow,
  WordDwell,
} from "./types.js";

export interface SliderState {
  fixationMinMs: number;
  fixationMaxMs: number;
  hideThreshold: number; // Infinity disables collapsing
}

export const DEFAULT_SLIDERS: SliderState = {
  fixationMinMs: 100,
  fixationMaxMs: 800,
  hideThreshold: Infinity,
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function fmtMs(ms: number): string {
  return ms >= 10_000 ? `${(ms / 1000).toFixed(1)} s` : `${Math.round(ms)} ms`;
}

/** One stimulus card: colored word flow + metrics + annotations. */
export function renderStimulus(
  payload: SessionPayload | MergedPayload,
  sliders: SliderState,
  pageWords: { word_id: number; text: string; labels: string[] }[],
  aoiWordIds: number[] | null,
): HTMLElement {
  const card = el("article", "stimulus-card");
  const isMerged = !("participant" in payload);
  const head = el("header", "stimulus-head");
  const title = isMerged
    ? `${(payload as MergedPayload).stimulus} — all ${(payload as MergedPayload).contributors} participants`
    : `${(payload as SessionPayload).stimulus} — ${(payload as SessionPayload).participant}` +
      ` (page ${(payload as SessionPayload).chrono_index + 1} in task)`;
  head.appendChild(el("h3", "", title));

  const metrics = payload.metrics;
  if (metrics) {
    head.appendChild(
      el(
        "p",
        "metrics",
        `fixation time ${fmtMs(metrics.fixation_time_ms)} · ` +
          `${metrics.words_fixated} words, ${metrics.chars_fixated} chars fixated · ` +
          `${(metrics.percent_words_fixated * 100).toFixed(1)}% of ${metrics.word_count_in_aoi} AOI words`,
      ),
    );
  }
  card.appendChild(head);

  const body = el("div", "stimulus-body");
  const flow = el("p", "word-flow");
  const cfg = scaleFromSliders(sliders.fixationMinMs, sliders.fixationMaxMs);

  const totals = new Map<number, number>();
  const tips = new Map<number, string>();
  if (isMerged) {
    for (const w of (payload as MergedPayload).words) {
      totals.set(w.word_id, w.total_ms);
      const lines = Object.entries(w.per_participant)
        .sort()
        .map(([pid, p]) => `${pid}: ${fmtMs(p.total_ms)}`);
      tips.set(w.word_id, `${fmtMs(w.total_ms)} over ${w.contributors}\n${lines.join("\n")}`);
    }
  } else {
    for (const w of (payload as SessionPayload).words ?? []) {
      totals.set(w.word_id, w.total_ms);
      tips.set(
        w.word_id,
        `${fmtMs(w.total_ms)} (first ${fmtMs(w.first_seen_ms)}, last ${fmtMs(w.last_seen_ms)})`,
      );
    }
  }

  const aoiSet = aoiWordIds === null ? null : new Set(aoiWordIds);
  const visible = aoiSet === null ? pageWords : pageWords.filter((w) => aoiSet.has(w.word_id));
  const byId = new Map(pageWords.map((w) => [w.word_id, w]));

  const segments = collapseRuns(
    visible.map((w) => ({ word_id: w.word_id, text: w.text, char_start: 0, labels: w.labels })),
    totals,
    sliders.hideThreshold,
    cfg,
  );
  for (const seg of segments) {
    if (seg.kind === "ellipsis") {
      flow.appendChild(el("span", "ellipsis", `[… ${seg.hiddenCount} …] `));
      continue;
    }
    const word = byId.get(seg.wordId);
    const span = el("span", "word", (word?.text ?? "") + " ");
    const color = cssColor(seg.color, cfg);
    if (color) span.style.backgroundColor = color;
    const tip = tips.get(seg.wordId);
    if (tip) span.title = tip;
    flow.appendChild(span);
  }
  body.appendChild(flow);

  if (!isMerged) {
    const ann = (payload as SessionPayload).annotation;
    if (ann && Object.keys(ann).length) {
      const aside = el("aside", "annotations");
      for (const [k, v] of Object.entries(ann)) {
        aside.appendChild(el("div", "annotation", `${k}: ${String(v)}`));
      }
      body.appendChild(aside);
    }
  }
  card.appendChild(body);
  return card;
}

export function renderTable(rows: TableRow[], onSort: (key: string) => void, sortKey: string | null, descending: boolean): HTMLElement {
  const wrap = el("div", "table-wrap");
  const table = el("table", "data-table");
  if (!rows.length) {
    wrap.appendChild(el("p", "empty", "no rows for this filter"));
    return wrap;
  }
  const columns = Object.keys(rows[0]);
  const thead = el("thead");
  const hr = el("tr");
  for (const c of columns) {
    const th = el("th", "", c + (sortKey === c ? (descending ? " ↓" : " ↑") : ""));
    th.addEventListener("click", () => onSort(c));
    hr.appendChild(th);
  }
  thead.appendChild(hr);
  table.appendChild(thead);
  const tbody = el("tbody");
  for (const row of rows) {
    const tr = el("tr");
    for (const c of columns) {
      const v = row[c];
      tr.appendChild(el("td", "", typeof v === "number" ? String(Math.round(v * 1000) / 1000) : String(v ?? "")));
    }
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  wrap.appendChild(table);
  return wrap;
}

/**
 * Data-table rows as TSV for pasting into statistics tools; annotation
 * columns come along because they are plain row keys.
 */
export function tableTsv(rows: TableRow[]): string {
  if (!rows.length) return "";
  const columns = Object.keys(rows[0]);
  const lines = [columns.join("\t")];
  for (const row of rows) {
    lines.push(columns.map((c) => String(row[c] ?? "")).join("\t"));
  }
  return lines.join("\n") + "\n";
}

/** Stable sort preserving prior order among equals. */
export function sortRows(rows: TableRow[], key: string, descending: boolean): TableRow[] {
  return rows
    .map((row, i) => ({ row, i }))
    .sort((a, b) => {
      const va = a.row[key];
      const vb = b.row[key];
      let cmp: number;
      if (typeof va === "number" && typeof vb === "number") cmp = va - vb;
      else cmp = String(va).localeCompare(String(vb));
      if (descending) cmp = -cmp;
      return cmp !== 0 ? cmp : a.i - b.i;
    })
    .map((x) => x.row);
}

export class App {
  filter: QueryFilterState = emptyFilter();
  sliders: SliderState = { ...DEFAULT_SLIDERS };
  private seq = 0; // last-write-wins for in-flight queries
  private sessions: SessionPayload[] = [];
  private merged: MergedPayload[] = [];
  private rows: TableRow[] = [];
  private sortKey: string | null = null;
  private sortDesc = false;

  constructor(
    readonly client: WorkspaceClient,
    readonly root: HTMLElement,
  ) {}

  async boot(): Promise<void> {
    this.root.innerHTML = "";
    const layout = el("div", "layout");
    layout.appendChild(el("nav", "filter-panel"));
    const main = el("main", "main-panel");
    main.appendChild(el("section", "stimuli"));
    main.appendChild(el("section", "table-section"));
    layout.appendChild(main);
    this.root.appendChild(layout);
    await this.renderFilterPanel();
    await this.refresh();
  }

  private panel(): HTMLElement {
    return this.root.querySelector(".filter-panel") as HTMLElement;
  }

  private async renderFilterPanel(): Promise<void> {
    const panel = this.panel();
    panel.innerHTML = "";
    panel.appendChild(el("h2", "", "Filters"));
    let participants: string[] = [];
    let stimuli: { stimulus: string; visitors: number }[] = [];
    let labels: { label: string; words: number }[] = [];
    try {
      [participants, stimuli, labels] = await Promise.all([
        this.client.participants().then((d) => d.participants),
        this.client.stimuli(this.filter).then((d) => d.stimuli),
        this.client.labels().then((d) => d.labels),
      ]);
      this.clearBanner();
    } catch (err) {
      this.showBanner(`service unreachable: ${String(err)}`);
      return;
    }

    panel.appendChild(this.checkboxGroup("Subjects", participants.map((p) => [p, p]), (sel) => {
      this.filter.participants = sel.length ? sel : null;
      void this.refresh();
    }));
    panel.appendChild(
      this.checkboxGroup(
        "Stimuli pages",
        stimuli.map((s) => [s.stimulus, `${s.stimulus} (${s.visitors} subjects)`]),
        (sel) => {
          this.filter.stimuli = sel.length ? sel : null;
          void this.refresh();
        },
      ),
    );
    panel.appendChild(
      this.checkboxGroup(
        "AOI labels",
        labels.map((l) => [l.label, `${l.label} (${l.words} words)`]),
        (sel) => {
          this.filter.aoi = sel.length ? sel : null;
          void this.refresh();
        },
      ),
    );

    const mergedLabel = el("label", "merged-toggle");
    const mergedBox = el("input") as HTMLInputElement;
    mergedBox.type = "checkbox";
    mergedBox.addEventListener("change", () => {
      this.filter.merged = mergedBox.checked;
      void this.refresh();
    });
    mergedLabel.appendChild(mergedBox);
    mergedLabel.appendChild(document.createTextNode(" show all participants on the same page"));
    panel.appendChild(mergedLabel);

    panel.appendChild(this.slider("fixation min (ms)", 0, 400, this.sliders.fixationMinMs, (v) => {
      this.sliders.fixationMinMs = v;
      this.renderStimuli(); // client-side repaint only
    }));
    panel.appendChild(this.slider("fixation max (ms)", 200, 2000, this.sliders.fixationMaxMs, (v) => {
      this.sliders.fixationMaxMs = v;
      this.renderStimuli();
    }));
    panel.appendChild(
      this.slider("hide runs of ≥ N unread words (51 = off)", 1, 51, 51, (v) => {
        this.sliders.hideThreshold = v > 50 ? Infinity : v;
        this.renderStimuli();
      }),
    );

    const exportBtn = el("button", "export-btn", "Copy word-eye-fixations as CSV");
    exportBtn.addEventListener("click", () => void this.copyExport());
    panel.appendChild(exportBtn);
  }

  private checkboxGroup(
    title: string,
    items: [value: string, label: string][],
    onChange: (selected: string[]) => void,
  ): HTMLElement {
    const group = el("fieldset", "filter-group");
    group.appendChild(el("legend", "", title));
    const boxes: HTMLInputElement[] = [];
    for (const [value, label] of items) {
      const row = el("label", "filter-item");
      const box = el("input") as HTMLInputElement;
      box.type = "checkbox";
      box.value = value;
      box.addEventListener("change", () =>
        onChange(boxes.filter((b) => b.checked).map((b) => b.value)),
      );
      boxes.push(box);
      row.appendChild(box);
      row.appendChild(document.createTextNode(" " + label));
      group.appendChild(row);
    }
    return group;
  }

  private slider(
    label: string,
    min: number,
    max: number,
    value: number,
    onInput: (v: number) => void,
  ): HTMLElement {
    const wrap = el("label", "slider");
    const text = el("span", "", `${label}: ${value}`);
    const input = el("input") as HTMLInputElement;
    input.type = "range";
    input.min = String(min);
    input.max = String(max);
    input.value = String(value);
    input.addEventListener("input", () => {
      text.textContent = `${label}: ${input.value}`;
      onInput(Number(input.value));
    });
    wrap.appendChild(text);
    wrap.appendChild(input);
    return wrap;
  }

  showBanner(message: string): void {
    let banner = this.root.querySelector(".error-banner") as HTMLElement | null;
    if (!banner) {
      banner = el("div", "error-banner");
      this.root.prepend(banner);
    }
    banner.textContent = message;
  }

  clearBanner(): void {
    this.root.querySelector(".error-banner")?.remove();
  }

  async refresh(): Promise<void> {
    const seq = ++this.seq;
    try {
      const tablePromise = this.client.table(this.filter);
      tablePromise.catch(() => {}); // surfaced at the await below, not as an unhandled rejection
      if (this.filter.merged) {
        const stimuli = await this.client.stimuli(this.filter);
        const wanted = this.filter.stimuli ?? stimuli.stimuli.map((s) => s.stimulus);
        const payloads: MergedPayload[] = [];
        for (const sid of wanted) {
          const res = await this.client.merged(this.filter, sid);
          payloads.push(...res.merged);
        }
        if (seq !== this.seq) return; // a newer query superseded this one
        this.merged = payloads;
        this.sessions = [];
      } else {
        const stimuli = await this.client.stimuli(this.filter);
        const participants = this.filter.participants ?? (await this.client.participants()).participants;
        const sessions: SessionPayload[] = [];
        for (const pid of participants) {
          for (const s of stimuli.stimuli) {
            if (this.filter.stimuli && !this.filter.stimuli.includes(s.stimulus)) continue;
            try {
              const res = await this.client.session(this.filter, pid, s.stimulus);
              sessions.push(...res.sessions);
            } catch {
              /* participant did not visit this stimulus */
            }
          }
        }
        if (seq !== this.seq) return;
        sessions.sort((a, b) =>
          a.participant === b.participant
            ? a.chrono_index - b.chrono_index
            : a.participant.localeCompare(b.participant),
        );
        this.sessions = sessions;
        this.merged = [];
      }
      this.rows = (await tablePromise).rows;
      if (seq !== this.seq) return;
      this.clearBanner();
      this.renderStimuli();
      this.renderTableSection();
    } catch (err) {
      if (seq === this.seq) this.showBanner(`query failed: ${String(err)}`);
    }
  }

  private pageWordsFor(payload: SessionPayload): { word_id: number; text: string; labels: string[] }[] {
    return (payload.page?.words ?? []).map((w) => ({
      word_id: w.word_id,
      text: w.text,
      labels: w.labels,
    }));
  }

  renderStimuli(): void {
    const section = this.root.querySelector(".stimuli") as HTMLElement | null;
    if (!section) return;
    section.innerHTML = "";
    if (this.filter.merged) {
      for (const m of this.merged) {
        // merged payloads carry no page words; render from merged words in reading order
        const pageWords = m.words
          .slice()
          .sort((a, b) => a.word_id - b.word_id)
          .map((w) => ({ word_id: w.word_id, text: w.word, labels: [] as string[] }));
        section.appendChild(renderStimulus(m, this.sliders, pageWords, null));
      }
      if (!this.merged.length) section.appendChild(el("p", "empty", "no merged data for this filter"));
      return;
    }
    for (const s of this.sessions) {
      section.appendChild(renderStimulus(s, this.sliders, this.pageWordsFor(s), s.aoi_word_ids));
    }
    if (!this.sessions.length) section.appendChild(el("p", "empty", "no sessions for this filter"));
  }

  renderTableSection(): void {
    const section = this.root.querySelector(".table-section") as HTMLElement | null;
    if (!section) return;
    section.innerHTML = "";
    section.appendChild(el("h2", "", "Data table"));
    const search = el("input", "table-search") as HTMLInputElement;
    search.placeholder = "search rows";
    const copyBtn = el("button", "table-copy", "Copy table");
    copyBtn.addEventListener("click", () => {
      void navigator.clipboard?.writeText(tableTsv(this.rows)).catch(() => {});
    });
    const container = el("div", "table-container");
    const draw = () => {
      const needle = search.value.toLowerCase();
      let rows = this.rows.filter(
        (r) => !needle || Object.values(r).some((v) => String(v).toLowerCase().includes(needle)),
      );
      if (this.sortKey) rows = sortRows(rows, this.sortKey, this.sortDesc);
      container.innerHTML = "";
      container.appendChild(
        renderTable(rows, (key) => {
          this.sortDesc = this.sortKey === key ? !this.sortDesc : true;
          this.sortKey = key;
          draw();
        }, this.sortKey, this.sortDesc),
      );
    };
    search.addEventListener("input", draw);
    section.appendChild(search);
    section.appendChild(copyBtn);
    section.appendChild(container);
    draw();
  }

  /** Clipboard + download; body comes verbatim from /api/export.csv. */
  async copyExport(): Promise<string> {
    const body = await this.client.exportCsv(this.filter);
    try {
      await navigator.clipboard.writeText(body);
    } catch {
      /* clipboard may be unavailable; the download below still works */
    }
    const blob = new Blob([body], { type: "text/csv" });
    const a = el("a") as HTMLAnchorElement;
    a.href = URL.createObjectURL(blob);
    a.download = "word-eye-fixations.csv";
    a.click();
    URL.revokeObjectURL(a.href);
    return body;
  }
}
