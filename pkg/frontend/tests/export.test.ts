/**
 * The copy/export action must publish the /api/export.csv body verbatim:
 * a single source of truth, no client-side re-serialization.
 */
import { afterEach, describe, expect, it, vi } from "vitest";

import { WorkspaceClient, emptyFilter, filterQuery } from "../src/api.js";

const CSV_BODY =
  "participant,stimulus,word,char_start,total_ms,first_seen_ms,last_seen_ms\n" +
  "subj-01,page-00,science,12,540,0,536\n" +
  'subj-02,page-00,"me,thane",30,123.4,8,120\n';

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("export passthrough", () => {
  it("returns the server body byte-for-byte", async () => {
    const fetchMock = vi.fn(async () => new Response(CSV_BODY, { status: 200 }));
    vi.stubGlobal("fetch", fetchMock);
    const client = new WorkspaceClient("");
    const body = await client.exportCsv(emptyFilter());
    expect(body).toBe(CSV_BODY);
    expect(fetchMock).toHaveBeenCalledWith("/api/export.csv");
  });

  it("raises on server errors", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => new Response("nope", { status: 500 })));
    const client = new WorkspaceClient("");
    await expect(client.exportCsv(emptyFilter())).rejects.toThrow(/export failed/);
  });

  it("empty filter result stays header-only", async () => {
    const header = "participant,stimulus,word,char_start,total_ms,first_seen_ms,last_seen_ms\n";
    vi.stubGlobal("fetch", vi.fn(async () => new Response(header, { status: 200 })));
    const body = await new WorkspaceClient("").exportCsv(emptyFilter());
    expect(body).toBe(header);
  });
});

describe("filter query-string building", () => {
  it("serializes every filter dimension", () => {
    const q = filterQuery({
      participants: ["a", "b"],
      stimuli: ["s1"],
      aoi: ["title", "abstract"],
      aoiMode: "all",
      merged: true,
    });
    expect(q).toBe(
      "?participant=a&participant=b&stimulus=s1&aoi=title&aoi=abstract&aoi_mode=all&merged=true",
    );
  });

  it("null selections mean no parameters (server default = all)", () => {
    expect(filterQuery(emptyFilter())).toBe("");
  });
});
