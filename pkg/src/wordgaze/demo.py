"""Synthetic demo data: generated pages plus reading traces with known
per-word dwell, assembled into a ready-to-serve workspace.

Useful for trying the CLI/UI without real recordings and for scale and
end-to-end tests, where ground truth must be known in advance.
"""
from __future__ import annotations

import json
import random
from pathlib import Path
from typing import IO, Iterable

from .ingest import GazeSample, IngestConfig, RecordingMeta
from .snapshot import PageSnapshot, WordBox, save_snapshot
from .validation import generate_reading_trace
from .workspace import ProcessingParams, Workspace, import_data

_LEXICON = (
    "the of climate arctic methane research data search task page reading "
    "gas energy model ocean ice warming economy region study result word "
    "record keyword abstract science library journal impact release trillion "
    "global frozen tundra hydrate plume satellite investment billion years"
).split()

_SECTIONS = (
    ("title", 6),
    ("authors", 4),
    ("abstract", 28),
    ("keywords", 8),
    ("body", 60),
)

_CHAR_W = 9.0
_GAP = 8.0
_LINE_H = 26.0
_MARGIN = 20.0
_WRAP_X = 920.0


def make_demo_snapshot(
    stimulus_id: str,
    rng: random.Random,
    sections: Iterable[tuple[str, int]] = _SECTIONS,
    url: str | None = None,
) -> PageSnapshot:
    """A synthetic record-style page: fixed-width word boxes flowing in
    lines, one structural label per section plus the shared page label."""
    texts: list[str] = []
    labels: list[frozenset[str]] = []
    paths: list[str] = []
    for section, count in sections:
        for _ in range(count):
            texts.append(rng.choice(_LEXICON))
            labels.append(frozenset({section, "page"}))
            paths.append(f"html/body/div#page/div.{section}")

    words: list[WordBox] = []
    page_chunks: list[str] = []
    x = _MARGIN
    y = _MARGIN
    offset = 0
    for i, text in enumerate(texts):
        w = len(text) * _CHAR_W
        if x + w > _WRAP_X:
            x = _MARGIN
            y += _LINE_H
        words.append(
            WordBox(
                word_id=i,
                text=text,
                char_start=offset,
                char_end=offset + len(text),
                x=x,
                y=y,
                w=w,
                h=_LINE_H - 6.0,
                dom_path=paths[i],
                labels=labels[i],
            )
        )
        page_chunks.append(text)
        offset += len(text) + 1
        x += w + _GAP

    return PageSnapshot(
        stimulus_id=stimulus_id,
        url=url or f"https://example.org/{stimulus_id}",
        page_text=" ".join(page_chunks),
        viewport_width_px=_WRAP_X + _MARGIN,
        words=tuple(words),
    )


def make_reading_plan(
    snap: PageSnapshot,
    rng: random.Random,
    n_words: int = 12,
    meta: RecordingMeta = RecordingMeta(250.0),
    min_dwell_ms: float = 120.0,
    max_dwell_ms: float = 600.0,
) -> dict[int, float]:
    """A left-to-right reading plan over sampled words, dwell quantized to
    the sample grid so recovery is exact on noise-free traces."""
    period = meta.period_ms
    n_words = min(n_words, snap.word_count)
    chosen = sorted(rng.sample(range(snap.word_count), n_words))
    plan: dict[int, float] = {}
    for wid in chosen:
        dwell = rng.uniform(min_dwell_ms, max_dwell_ms)
        plan[wid] = max(round(dwell / period), 1) * period
    return plan


GAZE_HEADER = "participant,stimulus,time_ms,x,y\n"


def write_gaze_rows(fh: IO[str], samples: Iterable[GazeSample]) -> int:
    n = 0
    for s in samples:
        fh.write(f"{s.participant_id},{s.stimulus_id},{s.t!r},{s.x!r},{s.y!r}\n")
        n += 1
    return n


def build_demo_workspace(
    root: str | Path,
    participants: int = 3,
    stimuli: int = 4,
    seed: int = 7,
    sample_rate_hz: float = 250.0,
) -> Workspace:
    """Generate snapshots + traces + annotations and import them."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    inputs = root / "inputs"
    inputs.mkdir(exist_ok=True)
    rng = random.Random(seed)
    meta = RecordingMeta(sample_rate_hz)

    snapshot_files: list[Path] = []
    snaps: list[PageSnapshot] = []
    for k in range(stimuli):
        snap = make_demo_snapshot(f"page-{k:02d}", rng)
        path = inputs / f"page-{k:02d}.json"
        save_snapshot(snap, path)
        snapshot_files.append(path)
        snaps.append(snap)

    gaze_path = inputs / "gaze.csv"
    annotations = []
    with open(gaze_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(GAZE_HEADER)
        for p in range(participants):
            pid = f"subj-{p + 1:02d}"
            # each participant reads a random subset of pages, in order
            seen = sorted(rng.sample(range(stimuli), max(1, stimuli - p % 2)))
            for k in seen:
                plan = make_reading_plan(snaps[k], rng, n_words=14, meta=meta)
                trace = generate_reading_trace(
                    snaps[k], plan, meta, noise_px=1.5,
                    participant_id=pid, seed=rng.randrange(1 << 30),
                )
                # shift each page's trace so pages are chronological
                t0 = k * 120_000.0
                for s in trace:
                    fh.write(f"{pid},{s.stimulus_id},{s.t + t0!r},{s.x!r},{s.y!r}\n")
                annotations.append(
                    {
                        "participant": pid,
                        "stimulus": snaps[k].stimulus_id,
                        "task_type": rng.choice(["A", "B"]),
                        "topic": "methane clathrates",
                        "difficulty": rng.randint(1, 5),
                        "usefulness": rng.randint(0, 1),
                        "bookmarked": rng.randint(0, 1),
                    }
                )

    ann_path = inputs / "annotations.json"
    ann_path.write_text(json.dumps(annotations, indent=1), encoding="utf-8")

    ws = Workspace(root)
    config = IngestConfig(sample_rate_hz=sample_rate_hz)
    import_data(
        ws,
        gaze_files=[gaze_path],
        snapshot_files=snapshot_files,
        annotations_file=ann_path,
        config=config,
        params=ProcessingParams(),
    )
    return ws


__all__ = [
    "GAZE_HEADER",
    "build_demo_workspace",
    "make_demo_snapshot",
    "make_reading_plan",
    "write_gaze_rows",
]
