"""Word-level page snapshots.

A snapshot freezes one rendered stimulus page as an ordered list of words
with page-pixel geometry, character offsets into the page text, and the
id/class labels collected along each word's ancestor chain. Labels double
as the AOI vocabulary: an AOI is "every word carrying these labels", not
a drawn shape.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from typing import IO, Iterable

logger = logging.getLogger(__name__)

SNAPSHOT_SCHEMA_VERSION = 1

_WS = re.compile(r"\s+")


class SnapshotValidationError(ValueError):
    """Raised when a snapshot file violates the schema invariants."""

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("invalid snapshot: " + "; ".join(diagnostics[:5]) + ("" if len(diagnostics) <= 5 else f" (+{len(diagnostics) - 5} more)"))


@dataclass(frozen=True, slots=True)
class WordBox:
    """One word of the rendered page.

    ``char_start``/``char_end`` index into the snapshot's ``page_text``;
    ``labels`` holds every element id and class name found on the word's
    ancestor chain so both coarse and fine AOIs can be selected.
    """

    word_id: int
    text: str
    char_start: int
    char_end: int
    x: float
    y: float
    w: float
    h: float
    dom_path: str = ""
    labels: frozenset[str] = frozenset()


@dataclass(frozen=True)
class PageSnapshot:
    stimulus_id: str
    url: str
    page_text: str
    viewport_width_px: float
    words: tuple[WordBox, ...]
    layout_hash: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.layout_hash:
            object.__setattr__(self, "layout_hash", compute_layout_hash(self.words))

    @property
    def word_count(self) -> int:
        return len(self.words)


def normalize_whitespace(text: str) -> str:
    return _WS.sub(" ", text).strip()


def compute_layout_hash(words: Iterable[WordBox]) -> str:
    """Digest of word geometry + text; identifies a layout variant.

    Computed engine-side from content so producers in other languages do
    not have to replicate float formatting.
    """
    h = hashlib.sha256()
    for w in words:
        h.update(
            json.dumps(
                [w.text, repr(w.x), repr(w.y), repr(w.w), repr(w.h)],
                ensure_ascii=False,
                separators=(",", ":"),
            ).encode("utf-8")
        )
        h.update(b"\n")
    return h.hexdigest()


def validate_snapshot(snap: PageSnapshot) -> list[str]:
    """All invariant violations, each naming the offending word_id."""
    diags: list[str] = []
    text = snap.page_text
    n = len(text)
    prev_end = -1
    for i, w in enumerate(snap.words):
        if w.word_id != i:
            diags.append(f"word {i}: word_id {w.word_id} out of order")
        if not (0 <= w.char_start < w.char_end <= n):
            diags.append(f"word {i}: char range [{w.char_start},{w.char_end}) outside page_text")
            continue
        if w.char_start < prev_end:
            diags.append(f"word {i}: char range overlaps previous word")
        prev_end = max(prev_end, w.char_end)
        if len(w.text) != w.char_end - w.char_start:
            diags.append(f"word {i}: text length {len(w.text)} != char range length {w.char_end - w.char_start}")
        elif text[w.char_start : w.char_end] != w.text:
            diags.append(f"word {i}: text does not match page_text slice")
        if _WS.search(w.text):
            diags.append(f"word {i}: text contains whitespace")
        if not (w.w > 0 and w.h > 0):
            diags.append(f"word {i}: zero-area box {w.w}x{w.h}")
    reconstructed = " ".join(w.text for w in snap.words)
    if reconstructed != normalize_whitespace(text):
        diags.append("word texts do not reconstruct the whitespace-normalized page_text")
    return diags


def _word_from_dict(i: int, raw: dict) -> WordBox:
    return WordBox(
        word_id=int(raw.get("word_id", i)),
        text=raw["text"],
        char_start=int(raw["char_start"]),
        char_end=int(raw["char_end"]),
        x=float(raw["x"]),
        y=float(raw["y"]),
        w=float(raw["w"]),
        h=float(raw["h"]),
        dom_path=raw.get("dom_path", ""),
        labels=frozenset(raw.get("labels", [])),
    )


def load_snapshot(source: str | IO) -> PageSnapshot:
    """Load and validate a snapshot file.

    Rejects the file with the full diagnostic list when any invariant
    fails (overlapping char ranges, zero-area boxes, reconstruction
    mismatch, ...). The layout hash is always recomputed from content.
    """
    if hasattr(source, "read"):
        raw = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)

    version = raw.get("schema_version")
    if version != SNAPSHOT_SCHEMA_VERSION:
        raise SnapshotValidationError([f"unsupported schema_version: {version!r}"])
    try:
        words = tuple(_word_from_dict(i, w) for i, w in enumerate(raw["words"]))
        snap = PageSnapshot(
            stimulus_id=raw["stimulus_id"],
            url=raw.get("url", ""),
            page_text=raw["page_text"],
            viewport_width_px=float(raw.get("viewport_width_px", 0.0)),
            words=words,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotValidationError([f"malformed snapshot document: {exc}"]) from exc

    diags = validate_snapshot(snap)
    if diags:
        raise SnapshotValidationError(diags)
    return snap


def snapshot_to_dict(snap: PageSnapshot) -> dict:
    return {
        "schema_version": SNAPSHOT_SCHEMA_VERSION,
        "stimulus_id": snap.stimulus_id,
        "url": snap.url,
        "page_text": snap.page_text,
        "viewport_width_px": snap.viewport_width_px,
        "layout_hash": snap.layout_hash,
        "words": [
            {
                "word_id": w.word_id,
                "text": w.text,
                "char_start": w.char_start,
                "char_end": w.char_end,
                "x": w.x,
                "y": w.y,
                "w": w.w,
                "h": w.h,
                "dom_path": w.dom_path,
                "labels": sorted(w.labels),
            }
            for w in snap.words
        ],
    }


def save_snapshot(snap: PageSnapshot, path_or_stream) -> None:
    doc = snapshot_to_dict(snap)
    if hasattr(path_or_stream, "write"):
        json.dump(doc, path_or_stream, ensure_ascii=False, indent=1)
    else:
        with open(path_or_stream, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, ensure_ascii=False, indent=1)


def css_vocabulary(snap: PageSnapshot) -> dict[str, int]:
    """Every structural label on the page with its word count, in
    lexicographic order."""
    counts: dict[str, int] = {}
    for w in snap.words:
        for label in w.labels:
            counts[label] = counts.get(label, 0) + 1
    return dict(sorted(counts.items()))


def words_in_aoi(
    snap: PageSnapshot,
    wanted: Iterable[str],
    mode: str = "any",
) -> list[int]:
    """word_ids whose labels match the wanted set, in reading order.

    Mode "any" keeps words whose labels intersect ``wanted``; "all" keeps
    words carrying every wanted label. An empty ``wanted`` set means "no
    filter". Labels unknown on this page contribute nothing (heterogeneous
    stimuli are expected); a warning is logged, not raised.
    """
    wanted = frozenset(wanted)
    if mode not in ("any", "all"):
        raise ValueError(f"mode must be 'any' or 'all', got {mode!r}")
    if not wanted:
        return [w.word_id for w in snap.words]

    known = set()
    for w in snap.words:
        known.update(w.labels)
    unknown = wanted - known
    if unknown:
        logger.warning(
            "labels %s not present on stimulus %s", sorted(unknown), snap.stimulus_id
        )

    if mode == "any":
        return [w.word_id for w in snap.words if w.labels & wanted]
    return [w.word_id for w in snap.words if wanted <= w.labels]


def text_context(snap: PageSnapshot, char_pos: int, radius: int) -> str:
    """page_text within ``radius`` characters around ``char_pos``, clamped
    to the text bounds."""
    if not 0 <= char_pos <= len(snap.page_text):
        raise ValueError(f"char_pos {char_pos} outside page_text of length {len(snap.page_text)}")
    lo = max(0, char_pos - radius)
    hi = min(len(snap.page_text), char_pos + radius)
    return snap.page_text[lo:hi]


__all__ = [
    "PageSnapshot",
    "SNAPSHOT_SCHEMA_VERSION",
    "SnapshotValidationError",
    "WordBox",
    "compute_layout_hash",
    "css_vocabulary",
    "load_snapshot",
    "normalize_whitespace",
    "save_snapshot",
    "snapshot_to_dict",
    "text_context",
    "validate_snapshot",
    "words_in_aoi",
]
