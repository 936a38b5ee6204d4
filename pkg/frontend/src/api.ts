/**
 * Typed client for the read-only workspace API. All views are driven by
 * these endpoints; nothing here mutates server state.
 */
import type {
  ColorScaleConfig,
  LabelInfo,
  MergedPayload,
  QueryFilterState,
  SessionPayload,
  StimulusInfo,
  TableRow,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export function emptyFilter(): QueryFilterState {
  return { participants: null, stimuli: null, aoi: null, aoiMode: "any", merged: false };
}

/** Build the query string shared by all endpoints. */
export function filterQuery(f: QueryFilterState, extra: Record<string, string> = {}): string {
  const q = new URLSearchParams();
  if (f.participants !== null) for (const p of f.participants) q.append("participant", p);
  if (f.stimuli !== null) for (const s of f.stimuli) q.append("stimulus", s);
  if (f.aoi !== null && f.aoi.length > 0) for (const a of f.aoi) q.append("aoi", a);
  if (f.aoiMode !== "any") q.set("aoi_mode", f.aoiMode);
  if (f.merged) q.set("merged", "true");
  for (const [k, v] of Object.entries(extra)) q.set(k, v);
  const s = q.toString();
  return s ? `?${s}` : "";
}

async function getJson<T>(base: string, path: string): Promise<T> {
  const resp = await fetch(base + path);
  if (!resp.ok) {
    let detail = `${resp.status}`;
    try {
      const body = (await resp.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class WorkspaceClient {
  constructor(readonly base: string = "") {}

  participants(): Promise<{ participants: string[] }> {
    return getJson(this.base, "/api/participants");
  }

  stimuli(f: QueryFilterState): Promise<{ stimuli: StimulusInfo[] }> {
    const scope = { ...f, stimuli: null, merged: false, aoi: null };
    return getJson(this.base, "/api/stimuli" + filterQuery(scope));
  }

  labels(): Promise<{ labels: LabelInfo[] }> {
    return getJson(this.base, "/api/labels");
  }

  config(): Promise<{ color_scale: ColorScaleConfig; params: Record<string, unknown> }> {
    return getJson(this.base, "/api/config");
  }

  session(f: QueryFilterState, participant: string, stimulus: string): Promise<{ sessions: SessionPayload[] }> {
    const scope = { ...f, participants: [participant], stimuli: [stimulus], merged: false };
    return getJson(this.base, "/api/session" + filterQuery(scope));
  }

  sessions(f: QueryFilterState, participant: string, stimulus: string): Promise<{ sessions: SessionPayload[] }> {
    return this.session(f, participant, stimulus);
  }

  merged(f: QueryFilterState, stimulus: string): Promise<{ merged: MergedPayload[] }> {
    const scope = { ...f, stimuli: [stimulus] };
    return getJson(this.base, "/api/merged" + filterQuery(scope));
  }

  table(f: QueryFilterState): Promise<{ rows: TableRow[] }> {
    return getJson(this.base, "/api/table" + filterQuery(f));
  }

  /**
   * The CSV export body. The copy-to-clipboard action publishes this
   * byte-for-byte; the server is the single source of the format.
   */
  async exportCsv(f: QueryFilterState): Promise<string> {
    const resp = await fetch(this.base + "/api/export.csv" + filterQuery(f));
    if (!resp.ok) throw new ApiError(resp.status, `export failed: ${resp.status}`);
    return await resp.text();
  }
}
