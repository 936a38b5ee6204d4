/**
 * Word heat coloring. Mirrors the engine's color contract exactly:
 * 0 -> none, (0, scan_max] -> scan, above -> heat with the fraction
 * clamped over [heat_min, heat_max]; heat CSS comes from piecewise-linear
 * interpolation over the shared stop table with round-half-up channels.
 */
import type { ColorAssignment, ColorScaleConfig } from "./types.js";

export const DEFAULT_SCALE: ColorScaleConfig = {
  scan_max_ms: 100,
  heat_min_ms: 100,
  heat_max_ms: 800,
  stops: [
    [0, 0, 255],
    [0, 200, 0],
    [255, 255, 0],
    [255, 165, 0],
    [255, 0, 0],
  ],
  scan_color: [216, 191, 240],
};

export function colorFor(totalMs: number, cfg: ColorScaleConfig = DEFAULT_SCALE): ColorAssignment {
  if (totalMs < 0) throw new Error("totalMs must be >= 0");
  if (totalMs === 0) return { category: "none", heat_fraction: null };
  if (totalMs <= cfg.scan_max_ms) return { category: "scan", heat_fraction: null };
  const frac = (totalMs - cfg.heat_min_ms) / (cfg.heat_max_ms - cfg.heat_min_ms);
  return { category: "heat", heat_fraction: Math.min(1, Math.max(0, frac)) };
}

function roundHalfUp(v: number): number {
  return Math.floor(v + 0.5);
}

export function heatRgb(fraction: number, cfg: ColorScaleConfig = DEFAULT_SCALE): [number, number, number] {
  if (fraction < 0 || fraction > 1) throw new Error("fraction must be in [0, 1]");
  const stops = cfg.stops;
  const pos = fraction * (stops.length - 1);
  const k = Math.min(Math.trunc(pos), stops.length - 2);
  const t = pos - k;
  const a = stops[k];
  const b = stops[k + 1];
  return [
    roundHalfUp(a[0] + (b[0] - a[0]) * t),
    roundHalfUp(a[1] + (b[1] - a[1]) * t),
    roundHalfUp(a[2] + (b[2] - a[2]) * t),
  ];
}

function hex2(v: number): string {
  return v.toString(16).padStart(2, "0");
}

export function cssColor(assignment: ColorAssignment, cfg: ColorScaleConfig = DEFAULT_SCALE): string | null {
  if (assignment.category === "none") return null;
  const [r, g, b] =
    assignment.category === "scan" ? cfg.scan_color : heatRgb(assignment.heat_fraction ?? 0, cfg);
  return `#${hex2(r)}${hex2(g)}${hex2(b)}`;
}

/** Slider state -> config. Sliders repaint, they never filter data. */
export function scaleFromSliders(fixationMinMs: number, fixationMaxMs: number): ColorScaleConfig {
  const min = Math.max(1, fixationMinMs);
  const max = Math.max(min + 1, fixationMaxMs);
  return { ...DEFAULT_SCALE, scan_max_ms: min, heat_min_ms: min, heat_max_ms: max };
}
