"""Merging word-eye-fixation sets of multiple participants.

Stimuli rendered with dynamic content differ slightly between sessions, so
entries are aligned against a designated base snapshot on the textual
level: exact (same word at the same character position) first, otherwise
the nearest same-text word within a character-context radius. Entries that
match nowhere are returned, never dropped, so total dwell is conserved.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from math import fsum
from typing import Iterable, Sequence

from .mapping import WordEyeFixation
from .snapshot import PageSnapshot

DEFAULT_CONTEXT_RADIUS_CHARS = 50


@dataclass(frozen=True)
class ParticipantDwell:
    total_ms: float
    first_seen_ms: float
    last_seen_ms: float


@dataclass
class MergedWordFixation:
    """One base-snapshot word with dwell accumulated over participants.

    first/last timestamps stay per participant: session clocks of
    different recordings are unrelated.
    """

    word_id: int
    word: str
    char_start: int
    total_ms: float = 0.0
    per_participant: dict[str, ParticipantDwell] = field(default_factory=dict)

    @property
    def contributors(self) -> int:
        return len(self.per_participant)


class _BaseWordIndex:
    """Lookup structure over a base snapshot: exact position first, then
    nearest same-text word by char_start."""

    def __init__(self, base: PageSnapshot):
        self.exact: dict[tuple[str, int], int] = {}
        self.by_text: dict[str, list[tuple[int, int]]] = {}
        for w in base.words:
            self.exact[(w.text, w.char_start)] = w.word_id
            self.by_text.setdefault(w.text, []).append((w.char_start, w.word_id))
        for entries in self.by_text.values():
            entries.sort()

    def find(self, text: str, char_start: int, radius: int) -> int | None:
        wid = self.exact.get((text, char_start))
        if wid is not None:
            return wid
        entries = self.by_text.get(text)
        if not entries:
            return None
        starts = [e[0] for e in entries]
        lo = bisect_left(starts, char_start - radius)
        hi = bisect_right(starts, char_start + radius)
        best: tuple[int, int] | None = None  # (|delta|, char_start)
        best_wid = None
        for k in range(lo, hi):
            start, wid = entries[k]
            key = (abs(start - char_start), start)
            if best is None or key < best:
                best = key
                best_wid = wid
        return best_wid


def align_word(
    w: WordEyeFixation,
    base: PageSnapshot,
    radius: int = DEFAULT_CONTEXT_RADIUS_CHARS,
    *,
    _index: _BaseWordIndex | None = None,
) -> int | None:
    """Base-snapshot word_id for an entry, or None when unmatched.

    A word found at its exact character position wins outright; otherwise
    the same text is searched within ``radius`` characters before or after
    its position, closest first, ties to the smaller position.
    """
    index = _index if _index is not None else _BaseWordIndex(base)
    return index.find(w.word, w.char_start, radius)


def merge_sets(
    sets: Sequence[tuple[str, Iterable[WordEyeFixation], PageSnapshot]],
    base: PageSnapshot,
    radius: int = DEFAULT_CONTEXT_RADIUS_CHARS,
) -> tuple[list[MergedWordFixation], list[tuple[str, WordEyeFixation]]]:
    """Merge per-participant entry sets onto the base snapshot.

    ``sets`` holds (participant_id, entries, source snapshot) triples, all
    for the same stimulus (layout hashes may differ). Returns merged
    records ordered by word_id plus the unmatched entries; the grand
    total dwell of (merged + unmatched) equals the input total exactly.
    """
    if base is None:
        raise ValueError("merge requires a base snapshot")
    stimulus_ids = {snap.stimulus_id for _, _, snap in sets if snap is not None}
    if len(stimulus_ids) > 1:
        raise ValueError(f"merge_sets across stimuli: {sorted(stimulus_ids)}")

    index = _BaseWordIndex(base)
    merged: dict[int, MergedWordFixation] = {}
    by_participant: dict[int, dict[str, list[WordEyeFixation]]] = {}
    unmatched: list[tuple[str, WordEyeFixation]] = []

    for participant_id, entries, _snap in sets:
        for e in entries:
            wid = index.find(e.word, e.char_start, radius)
            if wid is None:
                unmatched.append((participant_id, e))
                continue
            by_participant.setdefault(wid, {}).setdefault(participant_id, []).append(e)

    for wid in sorted(by_participant):
        base_word = base.words[wid]
        rec = MergedWordFixation(
            word_id=wid, word=base_word.text, char_start=base_word.char_start
        )
        for participant_id in sorted(by_participant[wid]):
            items = by_participant[wid][participant_id]
            rec.per_participant[participant_id] = ParticipantDwell(
                total_ms=fsum(e.total_ms for e in items),
                first_seen_ms=min(e.first_seen_ms for e in items),
                last_seen_ms=max(e.last_seen_ms for e in items),
            )
        rec.total_ms = fsum(p.total_ms for p in rec.per_participant.values())
        merged[wid] = rec

    return [merged[wid] for wid in sorted(merged)], unmatched


def choose_base_snapshot(
    variants: Sequence[tuple[PageSnapshot, Sequence[str], float]],
) -> PageSnapshot:
    """Pick the merge anchor among layout variants of one stimulus.

    ``variants`` holds (snapshot, participant_ids seen on it, earliest
    session start). The variant seen by the most participants wins; ties
    go to the earliest session, then to the lexicographically smallest
    layout hash for determinism.
    """
    if not variants:
        raise ValueError("no snapshot variants to choose from")
    return min(
        variants,
        key=lambda v: (-len(set(v[1])), v[2], v[0].layout_hash),
    )[0]


__all__ = [
    "DEFAULT_CONTEXT_RADIUS_CHARS",
    "MergedWordFixation",
    "ParticipantDwell",
    "align_word",
    "choose_base_snapshot",
    "merge_sets",
]
