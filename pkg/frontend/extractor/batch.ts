/**
 * Batch snapshot extraction over a directory of saved stimulus HTML.
 *
 * Prefers a real browser (playwright or puppeteer, if installed) so
 * geometry reflects the original stylesheets; without one it falls back
 * to the synthetic layout engine, which keeps the pipeline runnable but
 * is not pixel-faithful (a warning is emitted and recorded).
 *
 * Usage: node dist/extractor/batch.js --in pages/ --out snapshots/ [--viewport 1280]
 */
import { mkdirSync, readFileSync, readdirSync, writeFileSync } from "node:fs";
import { basename, join } from "node:path";
import process from "node:process";

import { extractSnapshot, reconstructionHolds, type SnapshotDocument } from "./core.js";
import { SyntheticLayout } from "./synthetic.js";

interface BatchArgs {
  inDir: string;
  outDir: string;
  viewport: number;
}

function parseArgs(argv: string[]): BatchArgs {
  const args: BatchArgs = { inDir: "", outDir: "", viewport: 1280 };
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--in") args.inDir = argv[++i];
    else if (argv[i] === "--out") args.outDir = argv[++i];
    else if (argv[i] === "--viewport") args.viewport = Number(argv[++i]);
  }
  if (!args.inDir || !args.outDir) {
    console.error("usage: batch --in <html dir> --out <snapshot dir> [--viewport px]");
    process.exit(2);
  }
  return args;
}

async function tryBrowserExtract(
  htmlPath: string,
  stimulusId: string,
  viewport: number,
): Promise<SnapshotDocument | null> {
  let playwright: any = null;
  try {
    playwright = await import("playwright" as string);
  } catch {
    return null;
  }
  const browser = await playwright.chromium.launch();
  try {
    const page = await browser.newPage({ viewport: { width: viewport, height: 900 } });
    await page.goto("file://" + htmlPath, { waitUntil: "networkidle" });
    const coreSrc = readFileSync(new URL("./browser-bundle.js", import.meta.url), "utf-8");
    const snapshot = (await page.evaluate(
      ([src, sid]: [string, string]) => {
        // eslint-disable-next-line no-eval
        const mod = eval(src);
        return mod.extractCurrentPage(sid).snapshot;
      },
      [coreSrc, stimulusId],
    )) as SnapshotDocument;
    return snapshot;
  } finally {
    await browser.close();
  }
}

async function syntheticExtract(
  htmlPath: string,
  stimulusId: string,
  viewport: number,
): Promise<SnapshotDocument> {
  const { JSDOM } = await import("jsdom");
  const html = readFileSync(htmlPath, "utf-8");
  const dom = new JSDOM(html);
  const doc = dom.window.document;
  const { snapshot } = extractSnapshot(doc, new SyntheticLayout(doc, viewport), {
    stimulusId,
    url: `file://${htmlPath}`,
    viewportWidthPx: viewport,
  });
  return snapshot;
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  mkdirSync(args.outDir, { recursive: true });
  const files = readdirSync(args.inDir)
    .filter((f) => f.endsWith(".html") || f.endsWith(".htm"))
    .sort();
  const report: Record<string, unknown>[] = [];
  let usedSynthetic = false;

  for (const file of files) {
    const htmlPath = join(args.inDir, file);
    const stimulusId = basename(file).replace(/\.html?$/, "");
    let snapshot = await tryBrowserExtract(htmlPath, stimulusId, args.viewport);
    if (snapshot === null) {
      if (!usedSynthetic) {
        console.warn(
          "no browser driver installed; using the synthetic layout engine " +
            "(geometry is schematic, not pixel-faithful)",
        );
        usedSynthetic = true;
      }
      snapshot = await syntheticExtract(htmlPath, stimulusId, args.viewport);
    }
    const outPath = join(args.outDir, `${stimulusId}.json`);
    writeFileSync(outPath, JSON.stringify(snapshot, null, 1));
    report.push({
      stimulus: stimulusId,
      file: outPath,
      words: snapshot.words.length,
      reconstruction_ok: reconstructionHolds(snapshot),
      geometry: usedSynthetic ? "synthetic" : "browser",
    });
    console.log(`${stimulusId}: ${snapshot.words.length} words -> ${outPath}`);
  }
  writeFileSync(join(args.outDir, "extraction-report.json"), JSON.stringify(report, null, 1));
  console.log(`extracted ${report.length} pages`);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
