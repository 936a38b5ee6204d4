"""Hit-testing fixation samples against word geometry and aggregating
per-word dwell.

Only samples inside a whitespace word box are credited: gaze over margins
and inter-word gaps counts for nothing, which is why whole-page dwell sums
sit at or below the raw fixation-time sums.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import floor, fsum
from typing import IO, Mapping, Sequence

from .fixation import Fixation
from .ingest import RecordingMeta
from .snapshot import PageSnapshot

_DEFAULT_CELL_PX = 64.0


@dataclass(frozen=True, slots=True)
class WordEyeFixation:
    """Per-word dwell aggregate for one (participant, stimulus) session.

    ``char_start`` is the word's position in the page text — the anchor
    used when merging layout variants. Words never hit are simply absent,
    so ``total_ms`` is always positive.
    """

    participant_id: str
    stimulus_id: str
    word_id: int
    word: str
    char_start: int
    total_ms: float
    first_seen_ms: float
    last_seen_ms: float


class SpatialIndex:
    """Uniform grid over word boxes, optionally expanded by ``slop_px``.

    Queries answer exactly like a linear scan over the expanded boxes;
    containment is closed on all edges and ties go to the smallest
    word_id (document order).
    """

    def __init__(self, snap: PageSnapshot, slop_px: float = 0.0, cell_px: float = _DEFAULT_CELL_PX):
        if slop_px < 0:
            raise ValueError("slop_px must be >= 0")
        self.snapshot = snap
        self.slop_px = slop_px
        self._cell = cell_px
        self._grid: dict[tuple[int, int], list[int]] = {}
        # expanded box edges, columnar for the hot path
        n = len(snap.words)
        self._x0 = [0.0] * n
        self._y0 = [0.0] * n
        self._x1 = [0.0] * n
        self._y1 = [0.0] * n
        cell = cell_px
        grid = self._grid
        for w in snap.words:
            i = w.word_id
            x0 = w.x - slop_px
            y0 = w.y - slop_px
            x1 = w.x + w.w + slop_px
            y1 = w.y + w.h + slop_px
            self._x0[i] = x0
            self._y0[i] = y0
            self._x1[i] = x1
            self._y1[i] = y1
            for cx in range(floor(x0 / cell), floor(x1 / cell) + 1):
                for cy in range(floor(y0 / cell), floor(y1 / cell) + 1):
                    grid.setdefault((cx, cy), []).append(i)
        for ids in grid.values():
            ids.sort()

    def query(self, x: float, y: float) -> int | None:
        """word_id of the box containing (x, y), or None over whitespace."""
        cell = self._cell
        ids = self._grid.get((floor(x / cell), floor(y / cell)))
        if not ids:
            return None
        x0 = self._x0
        y0 = self._y0
        x1 = self._x1
        y1 = self._y1
        for i in ids:  # ascending, so the first hit is the document-order tie-break
            if x0[i] <= x <= x1[i] and y0[i] <= y <= y1[i]:
                return i
        return None


def build_index(snap: PageSnapshot, slop_px: float = 0.0) -> SpatialIndex:
    return SpatialIndex(snap, slop_px)


def hit_test(index: SpatialIndex, point: tuple[float, float]) -> int | None:
    return index.query(point[0], point[1])


def accumulate(
    times: Sequence[float],
    xs: Sequence[float],
    ys: Sequence[float],
    fixations: Sequence[Fixation],
    index: SpatialIndex,
    meta: RecordingMeta,
    *,
    participant_id: str,
    stimulus_id: str,
    centroid_mode: bool = False,
) -> list[WordEyeFixation]:
    """Aggregate fixation dwell onto words.

    Only fixation-labeled samples (the member ranges of ``fixations``, as
    detected on this same session) participate. A sample's dwell is the
    delta to the next sample of the same fixation; the final sample of
    each fixation contributes one nominal sample period. Dwell is credited
    to the word under the sample (or, in ``centroid_mode``, under the
    fixation centroid); samples over whitespace credit nothing.

    Returns records ordered by word_id.
    """
    period = meta.period_ms
    query = index.query
    totals: dict[int, list[float]] = {}
    first: dict[int, float] = {}
    last: dict[int, float] = {}

    for fix in fixations:
        start = fix.member_start
        stop = fix.member_stop
        centroid_wid = query(fix.centroid_x, fix.centroid_y) if centroid_mode else None
        for k in range(start, stop):
            if centroid_mode:
                wid = centroid_wid
            else:
                wid = query(xs[k], ys[k])
            if wid is None:
                continue
            t_k = times[k]
            dwell = times[k + 1] - t_k if k + 1 < stop else period
            bucket = totals.get(wid)
            if bucket is None:
                totals[wid] = [dwell]
                first[wid] = t_k
                last[wid] = t_k
            else:
                bucket.append(dwell)
                if t_k < first[wid]:
                    first[wid] = t_k
                if t_k > last[wid]:
                    last[wid] = t_k

    words = index.snapshot.words
    out: list[WordEyeFixation] = []
    for wid in sorted(totals):
        total = fsum(totals[wid])
        if total <= 0:
            continue  # zero-dwell words are absent by contract
        w = words[wid]
        out.append(
            WordEyeFixation(
                participant_id=participant_id,
                stimulus_id=stimulus_id,
                word_id=wid,
                word=w.text,
                char_start=w.char_start,
                total_ms=total,
                first_seen_ms=first[wid],
                last_seen_ms=last[wid],
            )
        )
    return out


def accumulate_points(
    times: Sequence[float],
    points: Sequence[tuple[float, float] | None],
    fixations: Sequence[Fixation],
    index: SpatialIndex,
    meta: RecordingMeta,
    *,
    participant_id: str,
    stimulus_id: str,
    centroid_mode: bool = False,
) -> list[WordEyeFixation]:
    """:func:`accumulate` over (x, y)-tuple points with None gaps.

    Fixation member ranges never cover gap samples, so the gaps are only
    placeholders here.
    """
    xs = [p[0] if p is not None else 0.0 for p in points]
    ys = [p[1] if p is not None else 0.0 for p in points]
    return accumulate(
        times,
        xs,
        ys,
        fixations,
        index,
        meta,
        participant_id=participant_id,
        stimulus_id=stimulus_id,
        centroid_mode=centroid_mode,
    )


WEF_STORE_VERSION = 1


def save_wef_store(
    entries: Sequence[WordEyeFixation],
    path_or_stream,
    *,
    layout_hash: str,
    params: Mapping | None = None,
) -> None:
    """Write one session's word-eye-fixation set with its provenance.

    Output is deterministic (sorted keys, repr floats) so re-processing
    with identical parameters is byte-stable.
    """
    if entries:
        pids = {e.participant_id for e in entries}
        sids = {e.stimulus_id for e in entries}
        if len(pids) != 1 or len(sids) != 1:
            raise ValueError("a store file holds exactly one (participant, stimulus)")
        participant_id, stimulus_id = entries[0].participant_id, entries[0].stimulus_id
    else:
        participant_id = stimulus_id = ""
    doc = {
        "store_version": WEF_STORE_VERSION,
        "participant_id": participant_id,
        "stimulus_id": stimulus_id,
        "layout_hash": layout_hash,
        "params": dict(params) if params else {},
        "words": [
            {
                "word_id": e.word_id,
                "word": e.word,
                "char_start": e.char_start,
                "total_ms": e.total_ms,
                "first_seen_ms": e.first_seen_ms,
                "last_seen_ms": e.last_seen_ms,
            }
            for e in entries
        ],
    }
    text = json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        with open(path_or_stream, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_wef_store(source: str | IO) -> tuple[list[WordEyeFixation], str, dict]:
    """Read a store file back: (entries, layout_hash, params)."""
    if hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if doc.get("store_version") != WEF_STORE_VERSION:
        raise ValueError(f"unsupported store_version: {doc.get('store_version')!r}")
    pid = doc["participant_id"]
    sid = doc["stimulus_id"]
    entries = [
        WordEyeFixation(
            participant_id=pid,
            stimulus_id=sid,
            word_id=int(w["word_id"]),
            word=w["word"],
            char_start=int(w["char_start"]),
            total_ms=float(w["total_ms"]),
            first_seen_ms=float(w["first_seen_ms"]),
            last_seen_ms=float(w["last_seen_ms"]),
        )
        for w in doc["words"]
    ]
    return entries, doc.get("layout_hash", ""), doc.get("params", {})


__all__ = [
    "SpatialIndex",
    "WEF_STORE_VERSION",
    "WordEyeFixation",
    "accumulate",
    "accumulate_points",
    "build_index",
    "hit_test",
    "load_wef_store",
    "save_wef_store",
]
