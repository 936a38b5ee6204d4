"""Statistical validation helpers and the synthetic trace generator.

Supports comparing engine-computed AOI dwell series against reference
exports from other analysis tools (summary stats + Pearson correlation in
a side-by-side report), and generating deterministic gaze traces whose
per-word dwell is known in advance, for end-to-end pipeline checks.
"""
from __future__ import annotations

import csv
import io
import logging
import random
from dataclasses import dataclass
from math import fsum, sqrt
from typing import IO, Mapping, Sequence

from .ingest import GazeSample, PAGE_RELATIVE, RecordingMeta
from .snapshot import PageSnapshot

logger = logging.getLogger(__name__)


class UndefinedCorrelationError(ValueError):
    """Pearson r is undefined (a constant series has zero variance)."""


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient, clamped into [-1, 1].

    Computed on mean-centered series with exact summation; raises
    :class:`UndefinedCorrelationError` when either series is constant
    rather than returning NaN.
    """
    n = len(xs)
    if n != len(ys):
        raise ValueError("series lengths differ")
    if n < 2:
        raise ValueError("pearson needs at least 2 pairs")
    mx = fsum(xs) / n
    my = fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = fsum(d * d for d in dx)
    syy = fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant series")
    sxy = fsum(a * b for a, b in zip(dx, dy))
    r = sxy / sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class SeriesStats:
    n: int
    max: float
    mean: float
    sd: float  # sample standard deviation (n-1 denominator)


def summary_stats(xs: Sequence[float]) -> SeriesStats:
    """Max / mean / sample sd of a series.

    A single-value series gets sd=0 with a degenerate-sample warning.
    """
    n = len(xs)
    if n == 0:
        raise ValueError("summary_stats of an empty series")
    mean = fsum(xs) / n
    if n == 1:
        logger.warning("degenerate sample: sd of a length-1 series reported as 0")
        return SeriesStats(1, xs[0], mean, 0.0)
    var = fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return SeriesStats(n, max(xs), mean, sqrt(var))


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side series comparison in the reference-vs-engine layout."""

    stats_reference: SeriesStats
    stats_engine: SeriesStats
    pearson_r: float
    n_pairs: int
    unmatched_reference: tuple[str, ...] = ()
    unmatched_engine: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "pearson_r": self.pearson_r,
            "reference": {
                "n": self.stats_reference.n,
                "max": self.stats_reference.max,
                "mean": self.stats_reference.mean,
                "sd": self.stats_reference.sd,
            },
            "engine": {
                "n": self.stats_engine.n,
                "max": self.stats_engine.max,
                "mean": self.stats_engine.mean,
                "sd": self.stats_engine.sd,
            },
            "unmatched_reference": list(self.unmatched_reference),
            "unmatched_engine": list(self.unmatched_engine),
        }

    def format_table(self) -> str:
        """Text table: tool x {max, mean, sd} with r in the first row."""
        lines = [
            f"{'Series':<10} {'Max':>12} {'Mean':>12} {'SD':>12} {'Pearson':>9}",
            f"{'reference':<10} {self.stats_reference.max:>12.3f} {self.stats_reference.mean:>12.3f} {self.stats_reference.sd:>12.3f} {self.pearson_r:>9.3f}",
            f"{'engine':<10} {self.stats_engine.max:>12.3f} {self.stats_engine.mean:>12.3f} {self.stats_engine.sd:>12.3f} {'':>9}",
            f"n_pairs = {self.n_pairs}",
        ]
        if self.unmatched_reference:
            lines.append("unmatched reference ids: " + ", ".join(self.unmatched_reference))
        if self.unmatched_engine:
            lines.append("unmatched engine ids: " + ", ".join(self.unmatched_engine))
        return "\n".join(lines)


def read_reference_csv(source: str | IO) -> dict[str, float]:
    """Reference series file: header row then (stimulus_id, seconds)."""
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        with open(source, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise ValueError("empty reference CSV")
    out: dict[str, float] = {}
    for rec in reader:
        if len(rec) < 2:
            continue
        out[rec[0]] = float(rec[1])
    return out


def compare_aoi_series(
    reference: Mapping[str, float],
    engine: Mapping[str, object],
) -> ComparisonReport:
    """Join two per-stimulus series on stimulus id and compare them.

    The reference side is in seconds (as exported by vendor tools).
    Engine values may be plain seconds or AOI metrics objects, whose
    millisecond fixation time is converted. Unmatched ids on either side
    are reported; fewer than 2 matched pairs is an error.
    """
    keys = sorted(set(reference) & set(engine))
    if len(keys) < 2:
        raise ValueError(f"only {len(keys)} matched pairs; need at least 2")

    def _engine_seconds(v) -> float:
        ms = getattr(v, "fixation_time_ms", None)
        if ms is not None:
            return ms / 1000.0
        return float(v)  # type: ignore[arg-type]

    ref_series = [reference[k] for k in keys]
    eng_series = [_engine_seconds(engine[k]) for k in keys]
    return ComparisonReport(
        stats_reference=summary_stats(ref_series),
        stats_engine=summary_stats(eng_series),
        pearson_r=pearson(ref_series, eng_series),
        n_pairs=len(keys),
        unmatched_reference=tuple(sorted(set(reference) - set(engine))),
        unmatched_engine=tuple(sorted(set(engine) - set(reference))),
    )


# ---------------------------------------------------------------------------
# Synthetic traces

#: Dwell presets for generated reading plans, after the two-stage reading
#: model: ~122 ms for bare word identification, 151-233 ms with lexical
#: access, depending on word difficulty.
DWELL_FAMILIARITY_MS = 122.0
DWELL_LEXICAL_MIN_MS = 151.0
DWELL_LEXICAL_MAX_MS = 233.0


def generate_reading_trace(
    snap: PageSnapshot,
    plan: Mapping[int, float],
    meta: RecordingMeta,
    noise_px: float = 0.0,
    *,
    participant_id: str = "synthetic",
    seed: int | None = 0,
) -> list[GazeSample]:
    """Emit a gaze trace that dwells on the planned words in plan order.

    Samples are spaced at the recording's nominal period, centered in each
    planned word's box with truncated Gaussian jitter (clamped into the
    box). Words are separated by two saccade samples parked far off the
    page content so they can never extend a fixation window or credit
    dwell. Each word receives round(dwell / period) samples, so a
    noise-free trace is recovered end-to-end within +-1 sample period per
    word (provided each dwell also spans the fixation detector's minimum
    duration).
    """
    period = meta.period_ms
    rng = random.Random(seed)
    words = snap.words
    for wid, dwell in plan.items():
        if wid < 0 or wid >= len(words):
            raise ValueError(f"planned word_id {wid} not in snapshot")
        if dwell < period:
            raise ValueError(
                f"planned dwell {dwell} ms for word {wid} is below one sample period ({period} ms)"
            )

    if not plan:
        return []

    # parking point for saccade samples: far outside every box
    park_x = max(w.x + w.w for w in words) + 500.0 if words else 500.0
    park_y = max(w.y + w.h for w in words) + 500.0 if words else 500.0

    samples: list[GazeSample] = []
    sid = snap.stimulus_id
    k = 0  # global sample-grid index

    def emit(x: float, y: float) -> None:
        nonlocal k
        samples.append(
            GazeSample(
                participant_id=participant_id,
                stimulus_id=sid,
                t=k * period,
                x=x,
                y=y,
                frame=PAGE_RELATIVE,
            )
        )
        k += 1

    first = True
    for wid, dwell in plan.items():
        if not first:
            emit(park_x, park_y)
            emit(park_x, park_y)
        first = False
        w = words[wid]
        cx = w.x + w.w / 2.0
        cy = w.y + w.h / 2.0
        n = round(dwell / period)
        for _ in range(n):
            if noise_px > 0:
                x = min(w.x + w.w, max(w.x, rng.gauss(cx, noise_px)))
                y = min(w.y + w.h, max(w.y, rng.gauss(cy, noise_px)))
            else:
                x, y = cx, cy
            emit(x, y)
    return samples


def plan_total_quantized(plan: Mapping[int, float], meta: RecordingMeta) -> dict[int, float]:
    """The dwell each planned word will actually receive on the sample
    grid: round(dwell / period) * period."""
    period = meta.period_ms
    return {wid: round(dwell / period) * period for wid, dwell in plan.items()}


__all__ = [
    "ComparisonReport",
    "DWELL_FAMILIARITY_MS",
    "DWELL_LEXICAL_MAX_MS",
    "DWELL_LEXICAL_MIN_MS",
    "SeriesStats",
    "UndefinedCorrelationError",
    "compare_aoi_series",
    "generate_reading_trace",
    "pearson",
    "plan_total_quantized",
    "read_reference_csv",
    "summary_stats",
]
