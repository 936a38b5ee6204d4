from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from wordgaze.snapshot import PageSnapshot, WordBox


def make_snapshot(words_spec, stimulus_id="stim-1", gap=" "):
    """Snapshot from (text, x, y, w, h, labels) tuples; char offsets and
    page_text derived with single-space separators."""
    words = []
    chunks = []
    offset = 0
    for i, spec in enumerate(words_spec):
        text, x, y, w, h = spec[:5]
        labels = frozenset(spec[5]) if len(spec) > 5 else frozenset()
        words.append(
            WordBox(
                word_id=i,
                text=text,
                char_start=offset,
                char_end=offset + len(text),
                x=float(x),
                y=float(y),
                w=float(w),
                h=float(h),
                dom_path=f"body/p/w{i}",
                labels=labels,
            )
        )
        chunks.append(text)
        offset += len(text) + 1
    return PageSnapshot(
        stimulus_id=stimulus_id,
        url=f"https://example.org/{stimulus_id}",
        page_text=gap.join(chunks),
        viewport_width_px=1000.0,
        words=tuple(words),
    )


def line_snapshot(texts, stimulus_id="stim-1", labels_by_index=None, y=10.0, char_w=10.0, h=20.0):
    """Words laid out left to right on one line, 10px/char, 10px gaps."""
    spec = []
    x = 10.0
    for i, t in enumerate(texts):
        w = len(t) * char_w
        lbls = labels_by_index.get(i, ()) if labels_by_index else ()
        spec.append((t, x, y, w, h, lbls))
        x += w + 10.0
    return make_snapshot(spec, stimulus_id=stimulus_id)


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def small_page():
    return line_snapshot(
        ["Methane", "clathrates", "trap", "vast", "amounts", "of", "gas"],
        labels_by_index={0: ("title",), 1: ("title",), 2: ("body",), 3: ("body",),
                         4: ("body",), 5: ("body",), 6: ("body", "highlight")},
    )
