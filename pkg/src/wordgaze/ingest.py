"""Raw tracker-export ingestion.

Parses delimiter-separated gaze logs into :class:`GazeSample` streams,
normalizes sample coordinates into page space (scroll + browser chrome
correction), and groups samples into per-(participant, stimulus) sessions.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import IO, Iterable, Iterator, Mapping, Sequence

logger = logging.getLogger(__name__)

#: Canonical gaze CSV column names. ``column_map`` maps these onto the
#: actual header names of a vendor export.
CANONICAL_COLUMNS = (
    "participant",
    "stimulus",
    "time_ms",
    "x",
    "y",
    "scroll_x",
    "scroll_y",
    "valid",
)

REQUIRED_COLUMNS = ("participant", "stimulus", "time_ms", "x", "y")

_FALSY = frozenset({"0", "false", "no", "invalid", ""})
_TRUTHY = frozenset({"1", "true", "yes", "valid"})


class ConfigError(ValueError):
    """A column mapping or sidecar config problem; not a data problem."""


class FrameKind(Enum):
    MONITOR_ABSOLUTE = "monitor_absolute"
    VIEWPORT_RELATIVE = "viewport_relative"
    PAGE_RELATIVE = "page_relative"


@dataclass(frozen=True, slots=True)
class CoordinateFrame:
    """Coordinate frame a sample was recorded in.

    Chrome offsets (browser header/toolbar height) apply only to
    monitor-absolute recordings; page-relative data needs no correction.
    """

    kind: FrameKind = FrameKind.PAGE_RELATIVE
    chrome_offset_x: float = 0.0
    chrome_offset_y: float = 0.0

    def __post_init__(self) -> None:
        if self.chrome_offset_x < 0 or self.chrome_offset_y < 0:
            raise ValueError("chrome offsets must be >= 0")


PAGE_RELATIVE = CoordinateFrame(FrameKind.PAGE_RELATIVE)


@dataclass(frozen=True, slots=True)
class GazeSample:
    """One timestamped tracker reading.

    ``t`` is milliseconds since session start. ``x``/``y`` are in the
    source frame; ``scroll_x``/``scroll_y`` are the page scroll offsets at
    sample time (0 for page-relative data). ``valid=False`` marks tracker
    dropout; such samples are kept because they break fixation continuity.
    """

    participant_id: str
    stimulus_id: str
    t: float
    x: float
    y: float
    frame: CoordinateFrame = PAGE_RELATIVE
    scroll_x: float = 0.0
    scroll_y: float = 0.0
    valid: bool = True


@dataclass(frozen=True, slots=True)
class RecordingMeta:
    """Per-recording hardware facts used downstream (dwell crediting)."""

    sample_rate_hz: float
    screen_px_per_degree: float | None = None

    def __post_init__(self) -> None:
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be > 0")

    @property
    def period_ms(self) -> float:
        return 1000.0 / self.sample_rate_hz


@dataclass
class RowError:
    row_number: int
    message: str


@dataclass
class ParseReport:
    """Per-file parse outcome: what was kept, what was skipped and why."""

    rows_total: int = 0
    rows_parsed: int = 0
    rows_skipped: int = 0
    errors: list[RowError] = field(default_factory=list)

    def add_error(self, row_number: int, message: str) -> None:
        self.rows_skipped += 1
        self.errors.append(RowError(row_number, message))


@dataclass(frozen=True)
class IngestConfig:
    """Sidecar configuration for one gaze export.

    Externalized because different vendors ship different schemas and
    coordinate frames; nothing here is hard-coded per vendor.
    """

    frame: CoordinateFrame = PAGE_RELATIVE
    sample_rate_hz: float = 250.0
    delimiter: str = ","
    dropout_markers: tuple[str, ...] = ("--",)
    column_map: Mapping[str, str] | None = None
    revisit_threshold_ms: float = 30_000.0
    out_of_page_slack_px: float = 5.0
    screen_px_per_degree: float | None = None

    @property
    def meta(self) -> RecordingMeta:
        return RecordingMeta(self.sample_rate_hz, self.screen_px_per_degree)

    @classmethod
    def from_json(cls, path_or_stream) -> "IngestConfig":
        if hasattr(path_or_stream, "read"):
            raw = json.load(path_or_stream)
        else:
            with open(path_or_stream, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: Mapping) -> "IngestConfig":
        try:
            kind = FrameKind(raw.get("frame", "page_relative"))
        except ValueError as exc:
            raise ConfigError(f"unknown frame kind: {raw.get('frame')!r}") from exc
        frame = CoordinateFrame(
            kind,
            float(raw.get("chrome_offset_x", 0.0)),
            float(raw.get("chrome_offset_y", 0.0)),
        )
        return cls(
            frame=frame,
            sample_rate_hz=float(raw.get("sample_rate_hz", 250.0)),
            delimiter=raw.get("delimiter", ","),
            dropout_markers=tuple(raw.get("dropout_markers", ["--"])),
            column_map=raw.get("column_map"),
            revisit_threshold_ms=float(raw.get("revisit_threshold_ms", 30_000.0)),
            out_of_page_slack_px=float(raw.get("out_of_page_slack_px", 5.0)),
            screen_px_per_degree=raw.get("screen_px_per_degree"),
        )


def _as_text(stream: IO) -> IO[str]:
    data = stream.read(0)
    if isinstance(data, bytes):
        return io.TextIOWrapper(stream, encoding="utf-8", newline="")
    return stream


def parse_gaze_csv(
    stream: IO,
    column_map: Mapping[str, str] | None = None,
    *,
    delimiter: str = ",",
    frame: CoordinateFrame = PAGE_RELATIVE,
    dropout_markers: Sequence[str] = ("--",),
    report: ParseReport | None = None,
) -> Iterator[GazeSample]:
    """Stream GazeSamples out of a delimiter-separated export.

    ``column_map`` maps canonical column names (participant, stimulus,
    time_ms, x, y, scroll_x, scroll_y, valid) to the file's header names;
    identity mapping by default. Parsing is streaming: memory use does not
    grow with row count.

    Rows whose x or y equals a dropout marker are kept with ``valid=False``.
    Rows with other unparseable numeric cells are skipped and recorded in
    ``report``; a missing mapped column raises :class:`ConfigError` naming
    the column.
    """
    text = _as_text(stream)
    reader = csv.reader(text, delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("gaze file has no header row")
    header = [h.strip() for h in header]

    cmap = dict(column_map) if column_map else {}
    for name in CANONICAL_COLUMNS:
        cmap.setdefault(name, name)

    index: dict[str, int] = {}
    for name in CANONICAL_COLUMNS:
        mapped = cmap[name]
        if mapped in header:
            index[name] = header.index(mapped)
        elif name in REQUIRED_COLUMNS:
            raise ConfigError(f"mapped column {mapped!r} (for {name!r}) not in header")

    i_part = index["participant"]
    i_stim = index["stimulus"]
    i_t = index["time_ms"]
    i_x = index["x"]
    i_y = index["y"]
    i_sx = index.get("scroll_x")
    i_sy = index.get("scroll_y")
    i_valid = index.get("valid")
    dropouts = frozenset(dropout_markers)
    nan = float("nan")
    page_relative = frame.kind is FrameKind.PAGE_RELATIVE

    for row_number, row in enumerate(reader, start=2):
        if report is not None:
            report.rows_total += 1
        if not row:
            continue
        try:
            t = float(row[i_t])
        except (ValueError, IndexError):
            if report is not None:
                report.add_error(row_number, f"bad time_ms cell: {row[i_t] if len(row) > i_t else '<missing>'!r}")
            continue
        if not math.isfinite(t) or t < 0:
            if report is not None:
                report.add_error(row_number, f"time_ms out of range: {t!r}")
            continue

        valid = True
        if i_valid is not None and i_valid < len(row):
            cell = row[i_valid].strip().lower()
            if cell in _FALSY:
                valid = False
            elif cell not in _TRUTHY:
                if report is not None:
                    report.add_error(row_number, f"bad valid cell: {row[i_valid]!r}")
                continue

        raw_x = row[i_x] if i_x < len(row) else ""
        raw_y = row[i_y] if i_y < len(row) else ""
        if raw_x in dropouts or raw_y in dropouts:
            x = y = nan
            valid = False
        else:
            try:
                x = float(raw_x)
                y = float(raw_y)
            except ValueError:
                if report is not None:
                    report.add_error(row_number, f"bad coordinate cells: {raw_x!r}, {raw_y!r}")
                continue

        sx = sy = 0.0
        try:
            if i_sx is not None and i_sx < len(row) and row[i_sx] != "":
                sx = float(row[i_sx])
            if i_sy is not None and i_sy < len(row) and row[i_sy] != "":
                sy = float(row[i_sy])
        except ValueError:
            if report is not None:
                report.add_error(row_number, "bad scroll cells")
            continue
        if sx < 0 or sy < 0:
            if report is not None:
                report.add_error(row_number, "negative scroll offset")
            continue

        if report is not None:
            report.rows_parsed += 1
        if page_relative:
            sx = sy = 0.0  # page-relative samples carry no scroll by contract
        yield GazeSample(
            participant_id=row[i_part],
            stimulus_id=row[i_stim],
            t=t,
            x=x,
            y=y,
            frame=frame,
            scroll_x=sx,
            scroll_y=sy,
            valid=valid,
        )


class ScrollLog:
    """Scroll state over time, joined to samples as a step function.

    For recordings whose gaze export lacks per-sample scroll columns, a
    separate scroll-event log (time_ms, scroll_x, scroll_y rows) supplies
    the offset in effect at each sample time: the last event at or before
    the timestamp wins, (0, 0) before the first event.
    """

    def __init__(self, events: Iterable[tuple[float, float, float]]):
        self._events = sorted(events)
        self._times = [e[0] for e in self._events]

    @classmethod
    def from_csv(cls, stream: IO, *, delimiter: str = ",") -> "ScrollLog":
        text = _as_text(stream)
        reader = csv.reader(text, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            return cls([])
        header = [h.strip() for h in header]
        try:
            i_t = header.index("time_ms")
            i_sx = header.index("scroll_x")
            i_sy = header.index("scroll_y")
        except ValueError as exc:
            raise ConfigError(f"scroll log needs time_ms, scroll_x, scroll_y columns, got {header}") from exc
        events = []
        for row in reader:
            if not row:
                continue
            events.append((float(row[i_t]), float(row[i_sx]), float(row[i_sy])))
        return cls(events)

    def at(self, t: float) -> tuple[float, float]:
        from bisect import bisect_right

        k = bisect_right(self._times, t)
        if k == 0:
            return (0.0, 0.0)
        _, sx, sy = self._events[k - 1]
        return (sx, sy)

    def apply(self, sample: GazeSample) -> GazeSample:
        sx, sy = self.at(sample.t)
        return replace(sample, scroll_x=sx, scroll_y=sy)

    def __len__(self) -> int:
        return len(self._events)


def normalize_to_page(
    sample: GazeSample,
    frame: CoordinateFrame | None = None,
    *,
    slack_px: float = 5.0,
) -> tuple[float, float] | None:
    """Convert a sample's coordinates into page space.

    Monitor-absolute data is shifted out of the browser chrome and into
    the scrolled document; viewport-relative data only needs the scroll
    offset; page-relative data passes through unchanged.

    Returns None when a resulting coordinate is negative beyond
    ``slack_px`` (out-of-page; the caller excludes it from mapping but
    counts it). Raises ValueError for invalid (dropout) samples.
    """
    if not sample.valid:
        raise ValueError("normalize_to_page requires a valid sample")
    if frame is None:
        frame = sample.frame
    kind = frame.kind
    if kind is FrameKind.PAGE_RELATIVE:
        x_p, y_p = sample.x, sample.y
    elif kind is FrameKind.VIEWPORT_RELATIVE:
        x_p = sample.x + sample.scroll_x
        y_p = sample.y + sample.scroll_y
    else:
        x_p = sample.x - frame.chrome_offset_x + sample.scroll_x
        y_p = sample.y - frame.chrome_offset_y + sample.scroll_y
    if x_p < -slack_px or y_p < -slack_px:
        return None
    return x_p, y_p


@dataclass
class Session:
    """All samples of one participant on one stimulus, time-ordered.

    ``visits`` are half-open index ranges split where consecutive sample
    timestamps gap by more than the revisit threshold; aggregation treats
    the whole session as one unit by default, but visits stay addressable.
    """

    participant_id: str
    stimulus_id: str
    samples: list[GazeSample]
    visits: list[tuple[int, int]]

    @property
    def start_ms(self) -> float:
        return self.samples[0].t if self.samples else 0.0

    @property
    def end_ms(self) -> float:
        return self.samples[-1].t if self.samples else 0.0

    @property
    def key(self) -> tuple[str, str]:
        return (self.participant_id, self.stimulus_id)


def split_visits(times: Sequence[float], revisit_threshold_ms: float) -> list[tuple[int, int]]:
    """Half-open index ranges separated by gaps > threshold."""
    if not len(times):
        return []
    visits = []
    start = 0
    for k in range(1, len(times)):
        if times[k] - times[k - 1] > revisit_threshold_ms:
            visits.append((start, k))
            start = k
    visits.append((start, len(times)))
    return visits


def sessionize(
    samples: Iterable[GazeSample],
    *,
    revisit_threshold_ms: float = 30_000.0,
) -> dict[tuple[str, str], Session]:
    """Group samples into per-(participant, stimulus) sessions.

    Each session's sample list is sorted by t with stable tie order equal
    to input order. Concatenating all session lists yields a permutation
    of the input.
    """
    groups: dict[tuple[str, str], list[GazeSample]] = {}
    for s in samples:
        groups.setdefault((s.participant_id, s.stimulus_id), []).append(s)

    sessions: dict[tuple[str, str], Session] = {}
    for key, group in groups.items():
        group.sort(key=lambda s: s.t)  # list.sort is stable
        visits = split_visits([s.t for s in group], revisit_threshold_ms)
        sessions[key] = Session(key[0], key[1], group, visits)
    return sessions


def page_points(
    session: Session,
    frame: CoordinateFrame | None = None,
    *,
    slack_px: float = 5.0,
) -> tuple[list[float], list[tuple[float, float] | None], int]:
    """Times and page-space points for a session; None marks a gap.

    Gaps are dropout samples and out-of-page samples; both break fixation
    continuity downstream. Returns (times, points, out_of_page_count).
    """
    times: list[float] = []
    points: list[tuple[float, float] | None] = []
    out_of_page = 0
    for s in session.samples:
        times.append(s.t)
        if not s.valid:
            points.append(None)
            continue
        p = normalize_to_page(s, frame, slack_px=slack_px)
        if p is None:
            out_of_page += 1
        points.append(p)
    return times, points, out_of_page


__all__ = [
    "CANONICAL_COLUMNS",
    "ConfigError",
    "CoordinateFrame",
    "FrameKind",
    "GazeSample",
    "IngestConfig",
    "PAGE_RELATIVE",
    "ParseReport",
    "RecordingMeta",
    "RowError",
    "ScrollLog",
    "Session",
    "page_points",
    "normalize_to_page",
    "parse_gaze_csv",
    "sessionize",
    "split_visits",
]
