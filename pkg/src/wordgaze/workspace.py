"""Directory-tree workspace: persisted sessions, snapshots and word-eye-
fixations behind a manifest, plus the query API driving the UI.

No database server: everything is structured text in one directory, which
keeps workspaces diffable and trivially copyable at study scale (hundreds
of stimulus pages, millions of samples). Import takes an exclusive lock
and is atomic per invocation; queries and the HTTP service are read-only.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import shutil
from array import array
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from filelock import FileLock

from . import analytics
from .analytics import SessionAnnotation, load_annotations
from .fixation import IdtParams, detect_fixations_arrays, fixation_duration_ms
from .ingest import (
    FrameKind,
    IngestConfig,
    ParseReport,
    ScrollLog,
    normalize_to_page,
    parse_gaze_csv,
    split_visits,
)
from .mapping import (
    SpatialIndex,
    WordEyeFixation,
    accumulate,
    build_index,
    load_wef_store,
    save_wef_store,
)
from .merge import MergedWordFixation, choose_base_snapshot, merge_sets
from .snapshot import PageSnapshot, load_snapshot, save_snapshot, words_in_aoi

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

_SLUG = re.compile(r"[^A-Za-z0-9._-]+")


class WorkspaceError(RuntimeError):
    pass


def _slug(s: str) -> str:
    return _SLUG.sub("_", s)[:48] or "_"


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _session_key(pid: str, sid: str) -> str:
    return hashlib.sha1(f"{pid}\x00{sid}".encode("utf-8")).hexdigest()[:12]


@dataclass
class ProcessingParams:
    """Everything that influences derived artifacts; stored with them."""

    idt: IdtParams = field(default_factory=IdtParams)
    slop_px: float = 0.0
    merge_radius_chars: int = 50
    centroid_mode: bool = False
    dwell_rule: str = "delta-next-plus-nominal-last"

    def to_dict(self) -> dict:
        return {
            "idt_dispersion_px": self.idt.dispersion_threshold_px,
            "idt_min_duration_ms": self.idt.min_duration_ms,
            "slop_px": self.slop_px,
            "merge_radius_chars": self.merge_radius_chars,
            "centroid_mode": self.centroid_mode,
            "dwell_rule": self.dwell_rule,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ProcessingParams":
        return cls(
            idt=IdtParams(
                float(d.get("idt_dispersion_px", IdtParams().dispersion_threshold_px)),
                float(d.get("idt_min_duration_ms", IdtParams().min_duration_ms)),
            ),
            slop_px=float(d.get("slop_px", 0.0)),
            merge_radius_chars=int(d.get("merge_radius_chars", 50)),
            centroid_mode=bool(d.get("centroid_mode", False)),
            dwell_rule=str(d.get("dwell_rule", "delta-next-plus-nominal-last")),
        )


class Workspace:
    """Handle on a workspace directory; the manifest is the source of
    truth for what logically exists."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.manifest: dict = {}
        self._snapshot_cache: dict[str, PageSnapshot] = {}
        self._index_cache: dict[tuple[str, float], SpatialIndex] = {}
        self._annotations: dict[tuple[str, str], SessionAnnotation] | None = None
        if self.manifest_path.exists():
            self.reload()
        else:
            self.manifest = {
                "version": MANIFEST_VERSION,
                "params": ProcessingParams().to_dict(),
                "ingest_config": {},
                "imported_files": {},
                "snapshots": {},  # layout_hash -> {stimulus_id, file, url, words}
                "sessions": [],  # session records, see _import_sessions
                "annotations_file": None,
            }

    # -- paths ------------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    @property
    def lock_path(self) -> Path:
        return self.root / ".lock"

    def _dir(self, name: str) -> Path:
        return self.root / name

    # -- manifest ---------------------------------------------------------

    def reload(self) -> None:
        with open(self.manifest_path, "r", encoding="utf-8") as fh:
            self.manifest = json.load(fh)
        if self.manifest.get("version") != MANIFEST_VERSION:
            raise WorkspaceError(
                f"workspace version {self.manifest.get('version')!r} not supported"
            )
        self._snapshot_cache.clear()
        self._index_cache.clear()
        self._annotations = None

    def _write_manifest(self) -> None:
        text = json.dumps(self.manifest, sort_keys=True, indent=1, ensure_ascii=False)
        tmp = self.manifest_path.with_suffix(".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, self.manifest_path)

    def exclusive_lock(self) -> FileLock:
        self.root.mkdir(parents=True, exist_ok=True)
        return FileLock(str(self.lock_path))

    @property
    def params(self) -> ProcessingParams:
        return ProcessingParams.from_dict(self.manifest.get("params", {}))

    @property
    def ingest_config(self) -> IngestConfig:
        raw = self.manifest.get("ingest_config") or {}
        return IngestConfig.from_dict(raw) if raw else IngestConfig()

    # -- lookups ----------------------------------------------------------

    def participants(self) -> list[str]:
        return sorted({s["participant_id"] for s in self.manifest["sessions"]})

    def stimuli(self) -> list[str]:
        return sorted({s["stimulus_id"] for s in self.manifest["sessions"]})

    def visitor_counts(self) -> dict[str, int]:
        counts: dict[str, set[str]] = {}
        for s in self.manifest["sessions"]:
            counts.setdefault(s["stimulus_id"], set()).add(s["participant_id"])
        return {sid: len(pids) for sid, pids in counts.items()}

    def sessions_for(
        self,
        participants: frozenset[str] | None = None,
        stimuli: frozenset[str] | None = None,
    ) -> list[dict]:
        out = []
        for s in self.manifest["sessions"]:
            if participants is not None and s["participant_id"] not in participants:
                continue
            if stimuli is not None and s["stimulus_id"] not in stimuli:
                continue
            out.append(s)
        return out

    def snapshot_by_hash(self, layout_hash: str) -> PageSnapshot:
        snap = self._snapshot_cache.get(layout_hash)
        if snap is None:
            entry = self.manifest["snapshots"].get(layout_hash)
            if entry is None:
                raise WorkspaceError(f"no snapshot with layout hash {layout_hash}")
            snap = load_snapshot(self.root / entry["file"])
            self._snapshot_cache[layout_hash] = snap
        return snap

    def snapshots_for_stimulus(self, stimulus_id: str) -> list[PageSnapshot]:
        return [
            self.snapshot_by_hash(h)
            for h, entry in sorted(self.manifest["snapshots"].items())
            if entry["stimulus_id"] == stimulus_id
        ]

    def index_for(self, layout_hash: str, slop_px: float) -> SpatialIndex:
        key = (layout_hash, slop_px)
        idx = self._index_cache.get(key)
        if idx is None:
            idx = build_index(self.snapshot_by_hash(layout_hash), slop_px)
            self._index_cache[key] = idx
        return idx

    def annotations(self) -> dict[tuple[str, str], SessionAnnotation]:
        if self._annotations is None:
            fname = self.manifest.get("annotations_file")
            if fname and (self.root / fname).exists():
                self._annotations = load_annotations(self.root / fname)
            else:
                self._annotations = {}
        return self._annotations

    def session_record(self, pid: str, sid: str) -> dict | None:
        for s in self.manifest["sessions"]:
            if s["participant_id"] == pid and s["stimulus_id"] == sid:
                return s
        return None

    def load_session_entries(self, record: Mapping) -> list[WordEyeFixation]:
        if not record.get("processed"):
            return []
        entries, _, _ = load_wef_store(self.root / record["wef_file"])
        return entries


# ---------------------------------------------------------------------------
# Import pipeline


class _SessionBuffer:
    """Columnar sample accumulator for one (participant, stimulus)."""

    __slots__ = ("t", "x", "y", "ok", "n_invalid", "n_out_of_page")

    def __init__(self) -> None:
        self.t = array("d")
        self.x = array("d")
        self.y = array("d")
        self.ok = array("b")
        self.n_invalid = 0
        self.n_out_of_page = 0


@dataclass
class ImportResult:
    no_op: bool = False
    sessions_imported: int = 0
    sessions_processed: int = 0
    snapshots_imported: int = 0
    samples_imported: int = 0
    rows_skipped: int = 0
    warnings: list[str] = field(default_factory=list)


def _ingest_gaze_file(
    path: Path,
    config: IngestConfig,
    buffers: dict[tuple[str, str], _SessionBuffer],
    scroll_log: ScrollLog | None = None,
) -> ParseReport:
    report = ParseReport()
    slack = config.out_of_page_slack_px
    frame = config.frame
    # scroll state joined from the event log only where the export itself
    # carries no scroll columns (and the frame needs one at all)
    join_scroll = (
        scroll_log is not None
        and len(scroll_log)
        and frame.kind is not FrameKind.PAGE_RELATIVE
    )
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for s in parse_gaze_csv(
            fh,
            config.column_map,
            delimiter=config.delimiter,
            frame=frame,
            dropout_markers=config.dropout_markers,
            report=report,
        ):
            if join_scroll and s.scroll_x == 0.0 and s.scroll_y == 0.0:
                s = scroll_log.apply(s)
            buf = buffers.get((s.participant_id, s.stimulus_id))
            if buf is None:
                buf = _SessionBuffer()
                buffers[(s.participant_id, s.stimulus_id)] = buf
            buf.t.append(s.t)
            if s.valid:
                p = normalize_to_page(s, frame, slack_px=slack)
                if p is None:
                    buf.n_out_of_page += 1
                    buf.x.append(0.0)
                    buf.y.append(0.0)
                    buf.ok.append(0)
                else:
                    buf.x.append(p[0])
                    buf.y.append(p[1])
                    buf.ok.append(1)
            else:
                buf.n_invalid += 1
                buf.x.append(0.0)
                buf.y.append(0.0)
                buf.ok.append(0)
    return report


def _sorted_columns(buf: _SessionBuffer):
    t = np.frombuffer(buf.t, dtype=np.float64)
    x = np.frombuffer(buf.x, dtype=np.float64)
    y = np.frombuffer(buf.y, dtype=np.float64)
    ok = np.frombuffer(buf.ok, dtype=np.int8)
    order = np.argsort(t, kind="stable")
    return t[order], x[order], y[order], ok[order]


def _write_session_csv(path: Path, t, x, y, ok) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,x,y,ok\n")
        write = fh.write
        tl = t.tolist()
        xl = x.tolist()
        yl = y.tolist()
        okl = ok.tolist()
        for i in range(len(tl)):
            write(f"{tl[i]!r},{xl[i]!r},{yl[i]!r},{okl[i]:d}\n")


def _read_session_csv(path: Path):
    ts = array("d")
    xs = array("d")
    ys = array("d")
    oks = array("b")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if header.strip() != "t,x,y,ok":
            raise WorkspaceError(f"unexpected session file header in {path}")
        for line in fh:
            a, b, c, d = line.rstrip("\n").split(",")
            ts.append(float(a))
            xs.append(float(b))
            ys.append(float(c))
            oks.append(int(d))
    return ts, xs, ys, oks


def _process_session(
    record: dict,
    t: Sequence[float],
    x: Sequence[float],
    y: Sequence[float],
    ok: Sequence[int],
    ws_root: Path,
    out_dir: Path,
    snap: PageSnapshot,
    index: SpatialIndex,
    config: IngestConfig,
    params: ProcessingParams,
) -> dict:
    """Detect fixations, accumulate word dwell, and persist the store
    file; returns the updated session record."""
    fixations, labels = detect_fixations_arrays(t, x, y, ok, params.idt)
    meta = config.meta
    entries = accumulate(
        t,
        x,
        y,
        fixations,
        index,
        meta,
        participant_id=record["participant_id"],
        stimulus_id=record["stimulus_id"],
        centroid_mode=params.centroid_mode,
    )
    total_fix_ms = sum(fixation_duration_ms(f, meta.period_ms) for f in fixations)
    wef_name = f"wef/{Path(record['session_file']).stem}.json"
    save_wef_store(
        entries,
        out_dir / Path(wef_name).name,
        layout_hash=snap.layout_hash,
        params=params.to_dict(),
    )
    record = dict(record)
    record.update(
        processed=True,
        wef_file=wef_name,
        layout_hash=snap.layout_hash,
        n_fixations=len(fixations),
        fixation_time_ms=total_fix_ms,
        word_dwell_ms=sum(e.total_ms for e in entries),
        params_used=params.to_dict(),
    )
    return record


def import_data(
    ws: Workspace,
    gaze_files: Sequence[str | Path] = (),
    snapshot_files: Sequence[str | Path] = (),
    annotations_file: str | Path | None = None,
    config: IngestConfig | None = None,
    params: ProcessingParams | None = None,
    scroll_log_file: str | Path | None = None,
) -> ImportResult:
    """Import raw inputs and process everything processable.

    Atomic per invocation: new files are staged and only promoted together
    with the rewritten manifest. Content addressing makes re-import of
    identical inputs a no-op. Sessions referencing a stimulus without any
    snapshot are stored but flagged unprocessed.
    """
    config = config or ws.ingest_config
    params = params or ws.params
    result = ImportResult()

    gaze_paths = [Path(p) for p in gaze_files]
    snap_paths = sorted(Path(p) for p in snapshot_files)
    ann_path = Path(annotations_file) if annotations_file else None
    scroll_path = Path(scroll_log_file) if scroll_log_file else None
    for p in [*gaze_paths, *snap_paths,
              *([ann_path] if ann_path else []),
              *([scroll_path] if scroll_path else [])]:
        if not p.is_file():
            raise WorkspaceError(f"input file not found: {p}")

    with ws.exclusive_lock():
        manifest = ws.manifest
        imported: dict = manifest["imported_files"]
        hashes = {p: _sha256_file(p) for p in gaze_paths + snap_paths}
        if ann_path:
            hashes[ann_path] = _sha256_file(ann_path)
        if scroll_path:
            hashes[scroll_path] = _sha256_file(scroll_path)
        new_paths = [p for p, h in hashes.items() if h not in imported]
        if not new_paths:
            logger.info("import is a no-op: all %d inputs already imported", len(hashes))
            result.no_op = True
            return result

        staging = ws.root / ".staging"
        if staging.exists():
            shutil.rmtree(staging)
        for sub in ("raw", "snapshots", "sessions", "wef"):
            (staging / sub).mkdir(parents=True)

        try:
            new_manifest = _run_import(
                ws, manifest, staging, gaze_paths, snap_paths, ann_path, hashes,
                config, params, result, scroll_path,
            )
            _commit_staging(ws.root, staging)
            ws.manifest = new_manifest
            ws._write_manifest()
            ws._snapshot_cache.clear()
            ws._index_cache.clear()
            ws._annotations = None
        finally:
            if staging.exists():
                shutil.rmtree(staging)
    return result


def _run_import(
    ws: Workspace,
    manifest: dict,
    staging: Path,
    gaze_paths: list[Path],
    snap_paths: list[Path],
    ann_path: Path | None,
    hashes: dict,
    config: IngestConfig,
    params: ProcessingParams,
    result: ImportResult,
    scroll_path: Path | None = None,
) -> dict:
    new_manifest = json.loads(json.dumps(manifest))  # deep copy
    imported = new_manifest["imported_files"]
    snapshots: dict = new_manifest["snapshots"]

    # snapshots first: they gate session processing
    for p in snap_paths:
        if hashes[p] in imported:
            continue
        snap = load_snapshot(p)  # raises SnapshotValidationError on bad files
        fname = f"snapshots/{_slug(snap.stimulus_id)}__{snap.layout_hash[:12]}.json"
        save_snapshot(snap, staging / "snapshots" / Path(fname).name)
        snapshots[snap.layout_hash] = {
            "stimulus_id": snap.stimulus_id,
            "file": fname,
            "url": snap.url,
            "words": len(snap.words),
        }
        imported[hashes[p]] = {"name": p.name, "kind": "snapshot"}
        result.snapshots_imported += 1
        ws._snapshot_cache[snap.layout_hash] = snap

    if ann_path and hashes[ann_path] not in imported:
        load_annotations(ann_path)  # validate before accepting
        shutil.copyfile(ann_path, staging / "annotations.json")
        new_manifest["annotations_file"] = "annotations.json"
        imported[hashes[ann_path]] = {"name": ann_path.name, "kind": "annotations"}

    scroll_log = None
    if scroll_path is not None:
        with open(scroll_path, "r", encoding="utf-8", newline="") as fh:
            scroll_log = ScrollLog.from_csv(fh, delimiter=config.delimiter)
        if hashes[scroll_path] not in imported:
            shutil.copyfile(scroll_path, staging / "raw" / f"{hashes[scroll_path][:12]}__{_slug(scroll_path.name)}")
            imported[hashes[scroll_path]] = {"name": scroll_path.name, "kind": "scroll_log"}

    # gaze files: parse + group into columnar session buffers
    buffers: dict[tuple[str, str], _SessionBuffer] = {}
    for p in gaze_paths:
        if hashes[p] in imported:
            logger.info("skipping already-imported gaze file %s", p.name)
            continue
        report = _ingest_gaze_file(p, config, buffers, scroll_log)
        result.rows_skipped += report.rows_skipped
        if report.errors:
            result.warnings.extend(
                f"{p.name}:{e.row_number}: {e.message}" for e in report.errors[:20]
            )
        shutil.copyfile(p, staging / "raw" / f"{hashes[p][:12]}__{_slug(p.name)}")
        imported[hashes[p]] = {"name": p.name, "kind": "gaze", "rows": report.rows_total}

    sessions: list[dict] = new_manifest["sessions"]
    by_key = {(s["participant_id"], s["stimulus_id"]): i for i, s in enumerate(sessions)}
    snaps_by_stimulus: dict[str, list[str]] = {}
    for h, entry in snapshots.items():
        snaps_by_stimulus.setdefault(entry["stimulus_id"], []).append(h)

    for (pid, sid), buf in sorted(buffers.items()):
        t, x, y, ok = _sorted_columns(buf)
        fname = f"sessions/{_slug(pid)}__{_slug(sid)}__{_session_key(pid, sid)}.csv"
        _write_session_csv(staging / "sessions" / Path(fname).name, t, x, y, ok)
        record = {
            "participant_id": pid,
            "stimulus_id": sid,
            "session_file": fname,
            "n_samples": int(len(t)),
            "n_invalid": buf.n_invalid,
            "n_out_of_page": buf.n_out_of_page,
            "start_ms": float(t[0]) if len(t) else 0.0,
            "end_ms": float(t[-1]) if len(t) else 0.0,
            "visits": [list(v) for v in split_visits(t, config.revisit_threshold_ms)],
            "processed": False,
            "wef_file": None,
            "layout_hash": None,
        }
        result.samples_imported += record["n_samples"]
        if (pid, sid) in by_key:
            logger.warning("replacing existing session (%s, %s)", pid, sid)
            sessions[by_key[(pid, sid)]] = record
        else:
            by_key[(pid, sid)] = len(sessions)
            sessions.append(record)
        result.sessions_imported += 1

    # process everything that has a snapshot and is not processed yet
    for i, record in enumerate(sessions):
        if record.get("processed"):
            continue
        layout_hashes = snaps_by_stimulus.get(record["stimulus_id"])
        if not layout_hashes:
            logger.info(
                "session (%s, %s) stored unprocessed: no snapshot for stimulus",
                record["participant_id"],
                record["stimulus_id"],
            )
            continue
        snap_hash = sorted(layout_hashes)[0]
        snap = ws.snapshot_by_hash(snap_hash) if snap_hash in ws._snapshot_cache else None
        if snap is None:
            entry = snapshots[snap_hash]
            src = staging / "snapshots" / Path(entry["file"]).name
            snap = load_snapshot(src if src.exists() else ws.root / entry["file"])
            ws._snapshot_cache[snap_hash] = snap
        index = ws._index_cache.get((snap_hash, params.slop_px))
        if index is None:
            index = build_index(snap, params.slop_px)
            ws._index_cache[(snap_hash, params.slop_px)] = index

        key = (record["participant_id"], record["stimulus_id"])
        if key in buffers:
            t, x, y, ok = _sorted_columns(buffers[key])
        else:
            src = staging / "sessions" / Path(record["session_file"]).name
            if not src.exists():
                src = ws.root / record["session_file"]
            t, x, y, ok = _read_session_csv(src)
        sessions[i] = _process_session(
            record, t, x, y, ok, ws.root, staging / "wef", snap, index, config, params
        )
        result.sessions_processed += 1

    new_manifest["params"] = params.to_dict()
    new_manifest["ingest_config"] = {
        "frame": config.frame.kind.value,
        "chrome_offset_x": config.frame.chrome_offset_x,
        "chrome_offset_y": config.frame.chrome_offset_y,
        "sample_rate_hz": config.sample_rate_hz,
        "delimiter": config.delimiter,
        "dropout_markers": list(config.dropout_markers),
        "column_map": dict(config.column_map) if config.column_map else None,
        "revisit_threshold_ms": config.revisit_threshold_ms,
        "out_of_page_slack_px": config.out_of_page_slack_px,
        "screen_px_per_degree": config.screen_px_per_degree,
    }
    return new_manifest


def _commit_staging(root: Path, staging: Path) -> None:
    for sub in ("raw", "snapshots", "sessions", "wef"):
        dest_dir = root / sub
        dest_dir.mkdir(exist_ok=True)
        src_dir = staging / sub
        if src_dir.exists():
            for f in src_dir.iterdir():
                os.replace(f, dest_dir / f.name)
    ann = staging / "annotations.json"
    if ann.exists():
        os.replace(ann, root / "annotations.json")


def process_workspace(ws: Workspace, params: ProcessingParams | None = None) -> int:
    """(Re-)run fixation detection + word mapping for every session with a
    snapshot, using ``params``; returns the number processed."""
    params = params or ws.params
    config = ws.ingest_config
    processed = 0
    with ws.exclusive_lock():
        snaps_by_stimulus: dict[str, list[str]] = {}
        for h, entry in ws.manifest["snapshots"].items():
            snaps_by_stimulus.setdefault(entry["stimulus_id"], []).append(h)
        wef_dir = ws.root / "wef"
        wef_dir.mkdir(exist_ok=True)
        sessions = ws.manifest["sessions"]
        for i, record in enumerate(sessions):
            layout_hashes = snaps_by_stimulus.get(record["stimulus_id"])
            if not layout_hashes:
                continue
            snap_hash = sorted(layout_hashes)[0]
            snap = ws.snapshot_by_hash(snap_hash)
            index = ws.index_for(snap_hash, params.slop_px)
            t, x, y, ok = _read_session_csv(ws.root / record["session_file"])
            sessions[i] = _process_session(
                record, t, x, y, ok, ws.root, wef_dir, snap, index, config, params
            )
            processed += 1
        ws.manifest["params"] = params.to_dict()
        ws._write_manifest()
    return processed


# ---------------------------------------------------------------------------
# Query API


@dataclass(frozen=True)
class QueryFilter:
    """What to select; None means "all" (an empty set selects nothing)."""

    participants: frozenset[str] | None = None
    stimuli: frozenset[str] | None = None
    aoi_labels: frozenset[str] | None = None
    aoi_mode: str = "any"
    merged: bool = False

    @classmethod
    def build(
        cls,
        participants: Iterable[str] | None = None,
        stimuli: Iterable[str] | None = None,
        aoi_labels: Iterable[str] | None = None,
        aoi_mode: str = "any",
        merged: bool = False,
    ) -> "QueryFilter":
        return cls(
            frozenset(participants) if participants is not None else None,
            frozenset(stimuli) if stimuli is not None else None,
            frozenset(aoi_labels) if aoi_labels is not None else None,
            aoi_mode,
            merged,
        )


@dataclass
class SessionView:
    """One processed session as served to clients."""

    participant_id: str
    stimulus_id: str
    chrono_index: int
    start_ms: float
    end_ms: float
    layout_hash: str | None
    processed: bool
    visitors: int
    entries: list[WordEyeFixation]
    snapshot: PageSnapshot | None
    annotation: SessionAnnotation | None
    aoi_word_ids: list[int] | None
    metrics: analytics.AoiMetrics | None

    @property
    def start_ms_key(self):
        return (self.start_ms, self.stimulus_id)


@dataclass
class MergedView:
    stimulus_id: str
    base_layout_hash: str
    contributors: int
    words: list[MergedWordFixation]
    unmatched: list[tuple[str, WordEyeFixation]]
    metrics: analytics.AoiMetrics | None


@dataclass
class QueryResult:
    sessions: list[SessionView]
    merged: list[MergedView]
    table: list[dict]
    not_found: list[str]


def query(
    ws: Workspace,
    f: QueryFilter | None = None,
    *,
    table_granularity: str = "session",
) -> QueryResult:
    """Resolve a filter against the workspace.

    Sessions come back ordered by participant, then chronological stimulus
    index; unknown participant/stimulus ids are reported in ``not_found``
    while the rest of the query is served.
    """
    f = f or QueryFilter()
    not_found: list[str] = []
    known_p = set(ws.participants())
    known_s = set(ws.stimuli())
    if f.participants is not None:
        not_found += [f"participant:{p}" for p in sorted(f.participants - known_p)]
    if f.stimuli is not None:
        not_found += [f"stimulus:{s}" for s in sorted(f.stimuli - known_s)]

    records = ws.sessions_for(f.participants, f.stimuli)
    visitors = ws.visitor_counts()
    annotations = ws.annotations()

    views: list[SessionView] = []
    for rec in records:
        pid, sid = rec["participant_id"], rec["stimulus_id"]
        entries = ws.load_session_entries(rec)
        snap = ws.snapshot_by_hash(rec["layout_hash"]) if rec.get("layout_hash") else None
        aoi_ids = None
        metrics = None
        if snap is not None:
            if f.aoi_labels is not None:
                aoi_ids = words_in_aoi(snap, f.aoi_labels, f.aoi_mode)
            metrics = analytics.aoi_metrics(
                entries, snap, f.aoi_labels or (), f.aoi_mode
            )
        views.append(
            SessionView(
                participant_id=pid,
                stimulus_id=sid,
                chrono_index=0,
                start_ms=rec["start_ms"],
                end_ms=rec["end_ms"],
                layout_hash=rec.get("layout_hash"),
                processed=bool(rec.get("processed")),
                visitors=visitors.get(sid, 0),
                entries=entries,
                snapshot=snap,
                annotation=annotations.get((pid, sid)),
                aoi_word_ids=aoi_ids,
                metrics=metrics,
            )
        )

    # chronological index per participant
    by_pid: dict[str, list[SessionView]] = {}
    for v in views:
        by_pid.setdefault(v.participant_id, []).append(v)
    for pid, group in by_pid.items():
        group.sort(key=lambda v: (v.start_ms, v.stimulus_id))
        for i, v in enumerate(group):
            v.chrono_index = i
    views.sort(key=lambda v: (v.participant_id, v.chrono_index))

    merged_views: list[MergedView] = []
    if f.merged:
        by_sid: dict[str, list[SessionView]] = {}
        for v in views:
            if v.processed and v.snapshot is not None:
                by_sid.setdefault(v.stimulus_id, []).append(v)
        for sid in sorted(by_sid):
            group = by_sid[sid]
            variants: dict[str, tuple[PageSnapshot, list[str], float]] = {}
            for v in group:
                snap = v.snapshot
                entry = variants.get(snap.layout_hash)
                if entry is None:
                    variants[snap.layout_hash] = (snap, [v.participant_id], v.start_ms)
                else:
                    entry[1].append(v.participant_id)
            base = choose_base_snapshot(
                [(s, pids, start) for s, pids, start in variants.values()]
            )
            merged, unmatched = merge_sets(
                [(v.participant_id, v.entries, v.snapshot) for v in group],
                base,
                ws.params.merge_radius_chars,
            )
            contributors = len({v.participant_id for v in group})
            m_metrics = analytics.aoi_metrics(
                merged, base, f.aoi_labels or (), f.aoi_mode
            )
            merged_views.append(
                MergedView(
                    stimulus_id=sid,
                    base_layout_hash=base.layout_hash,
                    contributors=contributors,
                    words=merged,
                    unmatched=unmatched,
                    metrics=m_metrics,
                )
            )

    table_sessions = [
        _TableSession(v.participant_id, v.stimulus_id, v.start_ms, v.entries, v.snapshot)
        for v in views
        if v.snapshot is not None
    ]
    table = analytics.table_rows(
        table_sessions, annotations, f.aoi_labels or (), f.aoi_mode,
        granularity=table_granularity,
    )
    return QueryResult(views, merged_views, table, not_found)


@dataclass(frozen=True)
class _TableSession:
    participant_id: str
    stimulus_id: str
    start_ms: float
    entries: list
    snapshot: PageSnapshot


def export_csv(ws: Workspace, f: QueryFilter | None = None) -> bytes:
    """The word-eye-fixation CSV for a filter (merged or per-session)."""
    f = f or QueryFilter()
    result = query(ws, f)
    if f.merged:
        chunks = []
        for m in result.merged:
            entries: list = m.words
            if f.aoi_labels is not None and m.metrics is not None:
                base = ws.snapshot_by_hash(m.base_layout_hash)
                keep = set(words_in_aoi(base, f.aoi_labels, f.aoi_mode))
                entries = [e for e in entries if e.word_id in keep]
            chunks.append(analytics.export_wef_csv(entries, stimulus_id=m.stimulus_id))
        if not chunks:
            return analytics.export_wef_csv([])
        # one header, concatenated bodies
        head, *rest = chunks
        body = b"".join(c.split(b"\n", 1)[1] for c in rest)
        return head + body
    entries = []
    for v in result.sessions:
        keep = set(v.aoi_word_ids) if v.aoi_word_ids is not None else None
        for e in v.entries:
            if keep is None or e.word_id in keep:
                entries.append(e)
    return analytics.export_wef_csv(entries)


__all__ = [
    "ImportResult",
    "MergedView",
    "ProcessingParams",
    "QueryFilter",
    "QueryResult",
    "SessionView",
    "Workspace",
    "WorkspaceError",
    "export_csv",
    "import_data",
    "process_workspace",
    "query",
]
