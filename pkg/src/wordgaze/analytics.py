"""Word-dwell analytics: heat coloring, AOI metrics, collapsed render
segments, data-table rows, and CSV export.

Everything here is a pure function over immutable inputs; the coloring
thresholds affect presentation only and never filter the underlying data.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from math import floor, fsum, inf
from typing import IO, Iterable, Mapping, Sequence

from .mapping import WordEyeFixation
from .merge import MergedWordFixation
from .snapshot import PageSnapshot, words_in_aoi

# Published hue stop table (cold to hot) and the scan color. Presentation
# only; the category/fraction contract is what downstream code relies on.
HEAT_STOPS: tuple[tuple[int, int, int], ...] = (
    (0, 0, 255),      # blue
    (0, 200, 0),      # green
    (255, 255, 0),    # yellow
    (255, 165, 0),    # orange
    (255, 0, 0),      # red
)
SCAN_RGB: tuple[int, int, int] = (216, 191, 240)  # light violet


@dataclass(frozen=True, slots=True)
class ColorScaleConfig:
    """Thresholds of the word heat scale.

    Dwell in (0, scan_max_ms] renders as a faint "scanned" tint; above
    that the heat ramp runs from heat_min_ms to heat_max_ms and clamps.
    """

    scan_max_ms: float = 100.0
    heat_min_ms: float = 100.0
    heat_max_ms: float = 800.0
    stops: tuple[tuple[int, int, int], ...] = HEAT_STOPS
    scan_color: tuple[int, int, int] = SCAN_RGB

    def __post_init__(self) -> None:
        if not (0 < self.scan_max_ms <= self.heat_min_ms < self.heat_max_ms):
            raise ValueError("need 0 < scan_max_ms <= heat_min_ms < heat_max_ms")
        if len(self.stops) < 2:
            raise ValueError("heat scale needs at least two stops")

    def to_dict(self) -> dict:
        return {
            "scan_max_ms": self.scan_max_ms,
            "heat_min_ms": self.heat_min_ms,
            "heat_max_ms": self.heat_max_ms,
            "stops": [list(s) for s in self.stops],
            "scan_color": list(self.scan_color),
        }


@dataclass(frozen=True, slots=True)
class ColorAssignment:
    """Color category for one word: none / scan / heat(fraction)."""

    category: str  # "none" | "scan" | "heat"
    heat_fraction: float | None = None


NO_COLOR = ColorAssignment("none")
SCAN = ColorAssignment("scan")


def color_for(total_ms: float, cfg: ColorScaleConfig = ColorScaleConfig()) -> ColorAssignment:
    """Category (and heat fraction) for a dwell total.

    0 -> none; (0, scan_max] -> scan; above -> heat with the fraction
    clamped into [0, 1] over [heat_min, heat_max].
    """
    if total_ms < 0:
        raise ValueError("total_ms must be >= 0")
    if total_ms == 0:
        return NO_COLOR
    if total_ms <= cfg.scan_max_ms:
        return SCAN
    frac = (total_ms - cfg.heat_min_ms) / (cfg.heat_max_ms - cfg.heat_min_ms)
    return ColorAssignment("heat", min(1.0, max(0.0, frac)))


def _round_half_up(v: float) -> int:
    return floor(v + 0.5)


def heat_rgb(fraction: float, cfg: ColorScaleConfig = ColorScaleConfig()) -> tuple[int, int, int]:
    """Piecewise-linear interpolation over the stop table."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    stops = cfg.stops
    pos = fraction * (len(stops) - 1)
    k = min(int(pos), len(stops) - 2)
    t = pos - k
    a, b = stops[k], stops[k + 1]
    return tuple(_round_half_up(a[i] + (b[i] - a[i]) * t) for i in range(3))  # type: ignore[return-value]


def css_color(assignment: ColorAssignment, cfg: ColorScaleConfig = ColorScaleConfig()) -> str | None:
    if assignment.category == "none":
        return None
    if assignment.category == "scan":
        r, g, b = cfg.scan_color
    else:
        r, g, b = heat_rgb(assignment.heat_fraction or 0.0, cfg)
    return f"#{r:02x}{g:02x}{b:02x}"


@dataclass(frozen=True)
class AoiMetrics:
    """Aggregates over the words selected by an AOI label set."""

    labels: frozenset[str]
    fixation_time_ms: float
    words_fixated: int
    chars_fixated: int
    percent_words_fixated: float
    word_count_in_aoi: int

    def to_dict(self) -> dict:
        return {
            "labels": sorted(self.labels),
            "fixation_time_ms": self.fixation_time_ms,
            "words_fixated": self.words_fixated,
            "chars_fixated": self.chars_fixated,
            "percent_words_fixated": self.percent_words_fixated,
            "word_count_in_aoi": self.word_count_in_aoi,
        }


def aoi_metrics(
    entries: Iterable[WordEyeFixation | MergedWordFixation],
    snap: PageSnapshot,
    labels: Iterable[str] = (),
    mode: str = "any",
) -> AoiMetrics:
    """Metrics over the AOI selected by ``labels`` (empty = whole page)."""
    labels = frozenset(labels)
    aoi_ids = words_in_aoi(snap, labels, mode)
    aoi_set = set(aoi_ids)
    fixated = [e for e in entries if e.word_id in aoi_set]
    time_ms = fsum(e.total_ms for e in fixated)
    words_fixated = len({e.word_id for e in fixated})
    chars = sum(len(snap.words[w].text) for w in {e.word_id for e in fixated})
    n_aoi = len(aoi_ids)
    return AoiMetrics(
        labels=labels,
        fixation_time_ms=time_ms,
        words_fixated=words_fixated,
        chars_fixated=chars,
        percent_words_fixated=(words_fixated / n_aoi) if n_aoi else 0.0,
        word_count_in_aoi=n_aoi,
    )


@dataclass(frozen=True)
class SessionAnnotation:
    """Task metadata attached to one (participant, stimulus) session:
    task type, topic, questionnaire answers, free-form extras."""

    participant_id: str
    stimulus_id: str
    values: Mapping[str, object] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.participant_id, self.stimulus_id)


def load_annotations(source: str | IO) -> dict[tuple[str, str], SessionAnnotation]:
    """Read the annotation sidecar: a JSON array of objects each carrying
    participant, stimulus, and arbitrary key/value pairs."""
    if hasattr(source, "read"):
        raw = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    out: dict[tuple[str, str], SessionAnnotation] = {}
    for item in raw:
        pid = str(item["participant"])
        sid = str(item["stimulus"])
        values = {k: v for k, v in item.items() if k not in ("participant", "stimulus")}
        out[(pid, sid)] = SessionAnnotation(pid, sid, values)
    return out


@dataclass(frozen=True, slots=True)
class RenderSegment:
    """Either one visible word or an ellipsis standing in for a run of
    consecutive never-fixated words."""

    kind: str  # "word" | "ellipsis"
    word_id: int = -1
    color: ColorAssignment = NO_COLOR
    hidden_count: int = 0


def collapse_runs(
    snap: PageSnapshot,
    entries: Iterable[WordEyeFixation | MergedWordFixation],
    hide_threshold: float = inf,
    cfg: ColorScaleConfig = ColorScaleConfig(),
) -> list[RenderSegment]:
    """Render segments for a page: words with their colors, with maximal
    runs of >= hide_threshold consecutive non-fixated words collapsed
    into one ellipsis. ``hide_threshold=inf`` disables collapsing."""
    if hide_threshold != inf and hide_threshold < 1:
        raise ValueError("hide_threshold must be >= 1 (or inf to disable)")
    totals = {e.word_id: e.total_ms for e in entries}
    segments: list[RenderSegment] = []
    run_start = 0
    run = 0

    def flush_run() -> None:
        nonlocal run
        if run == 0:
            return
        if run >= hide_threshold:
            segments.append(RenderSegment("ellipsis", hidden_count=run))
        else:
            for off in range(run):
                segments.append(RenderSegment("word", word_id=run_start + off))
        run = 0

    for w in snap.words:
        total = totals.get(w.word_id, 0.0)
        if total <= 0:
            if run == 0:
                run_start = w.word_id
            run += 1
        else:
            flush_run()
            segments.append(
                RenderSegment("word", word_id=w.word_id, color=color_for(total, cfg))
            )
    flush_run()
    return segments


def _chrono_index(sessions: Sequence) -> dict[tuple[str, str], int]:
    """Rank each participant's sessions by start time (stimulus id breaks
    timestamp ties deterministically)."""
    by_participant: dict[str, list] = {}
    for s in sessions:
        by_participant.setdefault(s.participant_id, []).append(s)
    ranks: dict[tuple[str, str], int] = {}
    for pid, group in by_participant.items():
        group.sort(key=lambda s: (s.start_ms, s.stimulus_id))
        for i, s in enumerate(group):
            ranks[(pid, s.stimulus_id)] = i
    return ranks


def table_rows(
    sessions: Sequence,
    annotations: Mapping[tuple[str, str], SessionAnnotation] | None = None,
    aoi_labels: Iterable[str] = (),
    aoi_mode: str = "any",
    granularity: str = "session",
) -> list[dict]:
    """Flat data-table rows for the given AOI selection.

    ``sessions`` items need participant_id, stimulus_id, start_ms, entries
    and snapshot attributes. Granularity "session" emits one row per
    (participant, stimulus) with the AOI metrics; "word" emits one row per
    fixated AOI word. Rows are ordered by participant, then the
    participant's chronological stimulus index; annotation keys become
    columns with empty strings where missing.
    """
    if granularity not in ("session", "word"):
        raise ValueError(f"granularity must be 'session' or 'word', got {granularity!r}")
    annotations = annotations or {}
    aoi_labels = frozenset(aoi_labels)
    ranks = _chrono_index(sessions)

    ann_keys: list[str] = sorted(
        {k for ann in annotations.values() for k in ann.values}
    )
    rows: list[dict] = []
    for s in sessions:
        base: dict = {
            "participant": s.participant_id,
            "stimulus": s.stimulus_id,
            "chrono_index": ranks[(s.participant_id, s.stimulus_id)],
            "aoi_labels": ",".join(sorted(aoi_labels)),
        }
        ann = annotations.get((s.participant_id, s.stimulus_id))
        ann_cols = {k: (ann.values.get(k, "") if ann else "") for k in ann_keys}
        if granularity == "session":
            metrics = aoi_metrics(s.entries, s.snapshot, aoi_labels, aoi_mode)
            rows.append(
                base
                | {
                    "fixation_time_ms": metrics.fixation_time_ms,
                    "words_fixated": metrics.words_fixated,
                    "chars_fixated": metrics.chars_fixated,
                    "percent_words_fixated": metrics.percent_words_fixated,
                    "word_count_in_aoi": metrics.word_count_in_aoi,
                }
                | ann_cols
            )
        else:
            keep = set(words_in_aoi(s.snapshot, aoi_labels, aoi_mode))
            for e in sorted(s.entries, key=lambda e: e.word_id):
                if e.word_id not in keep:
                    continue
                rows.append(
                    base
                    | {
                        "word_id": e.word_id,
                        "word": e.word,
                        "char_start": e.char_start,
                        "total_ms": e.total_ms,
                        "first_seen_ms": e.first_seen_ms,
                        "last_seen_ms": e.last_seen_ms,
                    }
                    | ann_cols
                )
    rows.sort(key=lambda r: (r["participant"], r["chrono_index"]))
    return rows


# ---------------------------------------------------------------------------
# CSV export

WEF_CSV_COLUMNS = (
    "participant",
    "stimulus",
    "word",
    "char_start",
    "total_ms",
    "first_seen_ms",
    "last_seen_ms",
)
MERGED_EXTRA_COLUMNS = ("contributors", "per_participant_ms")


def format_ms(value: float) -> str:
    """Canonical millisecond rendering: at most one decimal place."""
    r = round(value, 1)
    if r == int(r):
        return str(int(r))
    return f"{r:.1f}"


@dataclass(frozen=True)
class WefCsvRow:
    """One parsed export row; merged exports carry the two extra fields."""

    participant: str
    stimulus: str
    word: str
    char_start: int
    total_ms: float
    first_seen_ms: float
    last_seen_ms: float
    contributors: int | None = None
    per_participant_ms: str | None = None


def _entry_to_row(e) -> WefCsvRow:
    if isinstance(e, WefCsvRow):
        return e
    if isinstance(e, MergedWordFixation):
        breakdown = ";".join(
            f"{pid}={format_ms(p.total_ms)}" for pid, p in sorted(e.per_participant.items())
        )
        return WefCsvRow(
            participant="*merged*",
            stimulus="",
            word=e.word,
            char_start=e.char_start,
            total_ms=e.total_ms,
            first_seen_ms=min(p.first_seen_ms for p in e.per_participant.values()),
            last_seen_ms=max(p.last_seen_ms for p in e.per_participant.values()),
            contributors=e.contributors,
            per_participant_ms=breakdown,
        )
    return WefCsvRow(
        participant=e.participant_id,
        stimulus=e.stimulus_id,
        word=e.word,
        char_start=e.char_start,
        total_ms=e.total_ms,
        first_seen_ms=e.first_seen_ms,
        last_seen_ms=e.last_seen_ms,
    )


def export_wef_csv(
    entries: Iterable[WordEyeFixation | MergedWordFixation | WefCsvRow],
    *,
    stimulus_id: str | None = None,
) -> bytes:
    """Serialize entries into the word-eye-fixation CSV (UTF-8, comma,
    RFC-style quoting). Merged entries add contributors + per-participant
    columns. Export -> parse -> export is byte-identical."""
    rows = [_entry_to_row(e) for e in entries]
    merged = any(r.contributors is not None for r in rows)
    columns = WEF_CSV_COLUMNS + (MERGED_EXTRA_COLUMNS if merged else ())

    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        record = [
            r.participant,
            stimulus_id if (merged and stimulus_id is not None) else r.stimulus,
            r.word,
            str(r.char_start),
            format_ms(r.total_ms),
            format_ms(r.first_seen_ms),
            format_ms(r.last_seen_ms),
        ]
        if merged:
            record.append(str(r.contributors if r.contributors is not None else 1))
            record.append(r.per_participant_ms or "")
        writer.writerow(record)
    return buf.getvalue().encode("utf-8")


def parse_wef_csv(data: bytes | str) -> list[WefCsvRow]:
    """Read an export back into rows (the inverse of export_wef_csv)."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty export")
    merged = "contributors" in header
    expected = list(WEF_CSV_COLUMNS + (MERGED_EXTRA_COLUMNS if merged else ()))
    if header != expected:
        raise ValueError(f"unexpected export header: {header}")
    rows = []
    for rec in reader:
        rows.append(
            WefCsvRow(
                participant=rec[0],
                stimulus=rec[1],
                word=rec[2],
                char_start=int(rec[3]),
                total_ms=float(rec[4]),
                first_seen_ms=float(rec[5]),
                last_seen_ms=float(rec[6]),
                contributors=int(rec[7]) if merged else None,
                per_participant_ms=rec[8] if merged else None,
            )
        )
    return rows


__all__ = [
    "AoiMetrics",
    "ColorAssignment",
    "ColorScaleConfig",
    "HEAT_STOPS",
    "MERGED_EXTRA_COLUMNS",
    "NO_COLOR",
    "RenderSegment",
    "SCAN",
    "SCAN_RGB",
    "SessionAnnotation",
    "WEF_CSV_COLUMNS",
    "WefCsvRow",
    "aoi_metrics",
    "collapse_runs",
    "color_for",
    "css_color",
    "export_wef_csv",
    "format_ms",
    "heat_rgb",
    "load_annotations",
    "parse_wef_csv",
    "table_rows",
]
