"""Acceptance suite: one test per release criterion, each printing a
PASS line with its measured numbers (run with -s or check test_output).

Scale/memory checks run the real CLI in a subprocess so resident memory
can be read from the OS, not estimated.
"""
from __future__ import annotations

import json
import math
import os
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest

from conftest import line_snapshot
from oracles import LinearScanIndex, idt_oracle
from test_fixation import random_trace
from wordgaze.analytics import export_wef_csv, parse_wef_csv
from wordgaze.fixation import IdtParams, detect_fixations_arrays
from wordgaze.ingest import IngestConfig, RecordingMeta
from wordgaze.mapping import build_index
from wordgaze.merge import align_word, merge_sets
from wordgaze.snapshot import PageSnapshot, WordBox, load_snapshot, save_snapshot
from wordgaze.validation import (
    compare_aoi_series,
    generate_reading_trace,
    pearson,
)
from wordgaze.workspace import (
    QueryFilter,
    Workspace,
    export_csv,
    import_data,
    query,
)

META = RecordingMeta(250.0)
PERIOD = META.period_ms
CONFIG = IngestConfig(sample_rate_hz=250.0)

# Six-statement dwell targets for the end-to-end fixture (ms per statement).
STATEMENT_TARGETS = {
    "stmt-A": 2562.4,
    "stmt-B": 2318.6,
    "stmt-C": 2412.3,
    "stmt-D": 5240.8,
    "stmt-E": 2323.3,
    "stmt-F": 723.4,
}


def ok(name: str, detail: str = "") -> None:
    print(f"[PASS] {name}" + (f" ({detail})" if detail else ""))


# ---------------------------------------------------------------------------


def test_idt_oracle_equivalence():
    """detect_fixations output equals a brute-force reference exactly on
    200 randomized traces."""
    rng = random.Random(20_240_501)
    t0 = time.monotonic()
    for trial in range(200):
        n = rng.randint(0, 500)
        times, xs, ys, okmask = random_trace(rng, n)
        params = IdtParams(
            dispersion_threshold_px=rng.uniform(5.0, 120.0),
            min_duration_ms=rng.uniform(20.0, 160.0),
        )
        fixations, labels = detect_fixations_arrays(times, xs, ys, okmask, params)
        oracle_segments, oracle_labels = idt_oracle(
            times, xs, ys, okmask, params.dispersion_threshold_px, params.min_duration_ms
        )
        assert [(f.member_start, f.member_stop) for f in fixations] == oracle_segments, trial
        assert labels == oracle_labels, trial
    elapsed = time.monotonic() - t0
    assert elapsed < 10.0, f"I-DT oracle sweep took {elapsed:.1f}s"
    ok("I-DT oracle equivalence", f"200 traces, {elapsed:.2f}s")


def test_hit_test_oracle_equivalence():
    """Spatial index agrees with a linear scan on 10k boxes x 10k queries,
    tie-breaks included."""
    rng = random.Random(77)
    boxes = [
        (
            rng.uniform(0, 5000),
            rng.uniform(0, 5000),
            rng.uniform(0.5, 120.0),
            rng.uniform(0.5, 40.0),
        )
        for _ in range(10_000)
    ]
    words = []
    offset = 0
    for i, (x, y, w, h) in enumerate(boxes):
        text = f"w{i}"
        words.append(WordBox(i, text, offset, offset + len(text), x, y, w, h))
        offset += len(text) + 1
    snap = PageSnapshot("hit", "", " ".join(w.text for w in words), 5000.0, tuple(words))

    t0 = time.monotonic()
    index = build_index(snap, slop_px=2.0)
    oracle = LinearScanIndex(boxes, slop_px=2.0)
    mismatches = 0
    queries = []
    for _ in range(9_000):
        queries.append((rng.uniform(-50, 5100), rng.uniform(-50, 5100)))
    # force tie-break coverage: points exactly on shared box edges
    for _ in range(1_000):
        x, y, w, h = boxes[rng.randrange(len(boxes))]
        queries.append((x + 2.0 + w, y + h / 2))  # right expanded edge
    for qx, qy in queries:
        if index.query(qx, qy) != oracle.query(qx, qy):
            mismatches += 1
    elapsed = time.monotonic() - t0
    assert mismatches == 0
    assert elapsed < 5.0, f"hit-test sweep took {elapsed:.1f}s"
    ok("hit-test oracle equivalence", f"10k boxes x 10k queries, {elapsed:.2f}s")


FIXTURES = Path(__file__).resolve().parent / "fixtures"


def _build_statement_snapshot():
    """Six 5-word statements, one label per statement, on separate lines.

    The canonical copy is the checked-in fixture file; this builder exists
    to regenerate it and to assert the file has not drifted.
    """
    words = []
    chunks = []
    offset = 0
    wid = 0
    ranges = {}
    for row, stmt in enumerate(STATEMENT_TARGETS):
        start_offset = offset
        x = 10.0
        for k in range(5):
            text = f"{stmt[-1].lower()}word{k}"
            w = len(text) * 9.0
            words.append(
                WordBox(
                    wid, text, offset, offset + len(text),
                    x, 10.0 + row * 40.0, w, 20.0,
                    dom_path=f"body/p#{stmt}",
                    labels=frozenset({stmt, "statement"}),
                )
            )
            chunks.append(text)
            offset += len(text) + 1
            x += w + 12.0
            wid += 1
        ranges[stmt] = (start_offset, offset - 1)
    snap = PageSnapshot(
        "bbc-methane", "https://example.org/bbc-methane",
        " ".join(chunks), 1200.0, tuple(words),
    )
    return snap, ranges


def _statement_snapshot():
    """The checked-in statement-page fixture plus per-statement character
    ranges derived from its labels."""
    snap = load_snapshot(FIXTURES / "statement_page.json")
    ranges = {}
    for stmt in STATEMENT_TARGETS:
        spans = [w for w in snap.words if stmt in w.labels]
        ranges[stmt] = (spans[0].char_start, spans[-1].char_end)
    return snap, ranges


def test_statement_fixture_in_sync():
    built, built_ranges = _build_statement_snapshot()
    loaded, loaded_ranges = _statement_snapshot()
    assert loaded == built
    assert loaded.layout_hash == built.layout_hash
    assert loaded_ranges == built_ranges


def _statement_plan(snap):
    """Distribute each statement's sample budget over its words, all on
    the 4 ms grid, every word >= 100 ms."""
    plan = {}
    per_statement = {}
    for stmt, target in STATEMENT_TARGETS.items():
        wids = [w.word_id for w in snap.words if stmt in w.labels]
        n_total = round(target / PERIOD)
        base, extra = divmod(n_total, len(wids))
        samples = [base + (1 if i < extra else 0) for i in range(len(wids))]
        assert all(s * PERIOD >= 100.0 for s in samples)
        for wid, n in zip(wids, samples):
            plan[wid] = n * PERIOD
        per_statement[stmt] = n_total * PERIOD
    return plan, per_statement


def test_end_to_end_recovery(tmp_path):
    """Noise-free planned traces (incl. the six-statement fixture) are
    recovered within one sample period after import -> process -> export."""
    t0 = time.monotonic()
    snap, ranges = _statement_snapshot()
    plan, per_statement = _statement_plan(snap)

    inputs = tmp_path / "in"
    inputs.mkdir()
    save_snapshot(snap, inputs / "page.json")
    trace = generate_reading_trace(snap, plan, META, 0.0, participant_id="subj-13")
    with open(inputs / "gaze.csv", "w", encoding="utf-8") as fh:
        fh.write("participant,stimulus,time_ms,x,y\n")
        for s in trace:
            fh.write(f"subj-13,{s.stimulus_id},{s.t!r},{s.x!r},{s.y!r}\n")

    ws = Workspace(tmp_path / "ws")
    import_data(
        ws,
        gaze_files=[inputs / "gaze.csv"],
        snapshot_files=[inputs / "page.json"],
        config=CONFIG,
    )
    body = export_csv(ws)
    rows = parse_wef_csv(body)

    # per-word recovery
    by_start = {w.char_start: plan[w.word_id] for w in snap.words if w.word_id in plan}
    assert len(rows) == len(plan)
    for r in rows:
        assert abs(r.total_ms - by_start[r.char_start]) <= PERIOD, r

    # per-statement sums against the fixture's dwell targets
    for stmt, (lo, hi) in ranges.items():
        got = sum(r.total_ms for r in rows if lo <= r.char_start < hi)
        assert abs(got - STATEMENT_TARGETS[stmt]) <= PERIOD, (
            stmt, got, STATEMENT_TARGETS[stmt]
        )
        assert got == per_statement[stmt]  # grid-exact

    elapsed = time.monotonic() - t0
    assert elapsed < 30.0, f"end-to-end recovery took {elapsed:.1f}s"
    ok(
        "end-to-end recovery",
        f"{len(plan)} words, 6 statements within {PERIOD:.0f} ms, {elapsed:.2f}s",
    )


def test_dwell_conservation(tmp_path):
    """Per session: word dwell never exceeds fixation time; exactly equal
    when every sample lies over a word."""
    snap, _ = _statement_snapshot()
    plan, _ = _statement_plan(snap)
    inputs = tmp_path / "in"
    inputs.mkdir()
    save_snapshot(snap, inputs / "page.json")

    # session 1: noise-free all-over-words; session 2: adds a long dwell
    # over margin whitespace (a fixation that credits nothing)
    trace1 = generate_reading_trace(snap, plan, META, 0.0, participant_id="clean")
    trace2 = generate_reading_trace(snap, plan, META, 0.0, participant_id="strays")
    t_next = trace2[-1].t + 2 * PERIOD
    with open(inputs / "gaze.csv", "w", encoding="utf-8") as fh:
        fh.write("participant,stimulus,time_ms,x,y\n")
        for s in trace1:
            fh.write(f"clean,{s.stimulus_id},{s.t!r},{s.x!r},{s.y!r}\n")
        for s in trace2:
            fh.write(f"strays,{s.stimulus_id},{s.t!r},{s.x!r},{s.y!r}\n")
        for k in range(100):  # whitespace fixation, far from all boxes
            fh.write(f"strays,{snap.stimulus_id},{t_next + k * PERIOD!r},2000.0,2000.0\n")

    ws = Workspace(tmp_path / "ws")
    import_data(
        ws, gaze_files=[inputs / "gaze.csv"], snapshot_files=[inputs / "page.json"],
        config=CONFIG,
    )
    records = {r["participant_id"]: r for r in ws.manifest["sessions"]}
    for rec in records.values():
        assert rec["word_dwell_ms"] <= rec["fixation_time_ms"] + 1e-9

    clean = records["clean"]
    assert clean["word_dwell_ms"] == clean["fixation_time_ms"]  # tolerance 0
    strays = records["strays"]
    assert strays["word_dwell_ms"] < strays["fixation_time_ms"]
    assert strays["fixation_time_ms"] - strays["word_dwell_ms"] == 100 * PERIOD
    ok(
        "dwell conservation",
        f"equality on clean session at 0 ms; strict deficit {100 * PERIOD:.0f} ms on strays",
    )


def test_validation_math():
    """Pearson fixtures, affine invariance, and the scaled-series
    comparison behave as specified."""
    xs = [1.0, 2.0, 3.0, 4.0]
    assert abs(pearson(xs, [2 * x + 1 for x in xs]) - 1.0) <= 1e-9
    assert abs(pearson(xs, [-x for x in xs]) + 1.0) <= 1e-9
    assert abs(pearson([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) <= 1e-9

    rng = random.Random(8)
    for _ in range(200):
        n = rng.randint(3, 40)
        series_x = [rng.uniform(-100, 100) for _ in range(n)]
        series_y = [x * 0.7 + rng.uniform(-30, 30) for x in series_x]
        a = rng.uniform(0.01, 50.0)
        b = rng.uniform(-100.0, 100.0)
        base = pearson(series_x, series_y)
        assert abs(pearson([a * x + b for x in series_x], series_y) - base) <= 1e-12

    reference = {f"s{i:03d}": float(v) for i, v in enumerate((12.5, 9.1, 20.4, 7.7, 15.0))}
    engine = {k: 0.83 * v for k, v in reference.items()}
    report = compare_aoi_series(reference, engine)
    assert abs(report.pearson_r - 1.0) <= 1e-9
    assert report.stats_engine.mean < report.stats_reference.mean
    ok("validation math", "r fixtures at 1e-9, affine at 1e-12, scaled-series mean below reference")


def test_merge_algebra():
    """Conservation + permutation invariance on 100 random fixtures, and
    the context-radius boundary behavior."""
    rng = random.Random(4242)
    for trial in range(100):
        texts = [rng.choice(["alpha", "beta", "gamma", "delta", "omega"]) for _ in range(40)]
        base = line_snapshot(texts, stimulus_id="m")
        sets = []
        for p in range(rng.randint(2, 6)):
            entries = []
            for w in rng.sample(list(base.words), rng.randint(1, 25)):
                shift = rng.choice((0, 0, 5, -5, 25, 49, 51, 300))
                entries.append(
                    _wef(f"p{p}", "m", w.word_id, w.text, max(0, w.char_start + shift),
                         float(rng.randint(1, 5000)))
                )
            sets.append((f"p{p}", entries, base))
        merged, unmatched = merge_sets(sets, base)
        total_in = sum(e.total_ms for _, entries, _ in sets for e in entries)
        total_out = sum(m.total_ms for m in merged) + sum(e.total_ms for _, e in unmatched)
        assert total_out == total_in, trial  # integer dwell: exact

        shuffled = sets[:]
        rng.shuffle(shuffled)
        merged2, unmatched2 = merge_sets(shuffled, base)
        key = lambda ms: [
            (m.word_id, m.total_ms, sorted(m.per_participant.items())) for m in ms
        ]
        assert key(merged) == key(merged2), trial
        assert sorted((p, e.total_ms) for p, e in unmatched) == sorted(
            (p, e.total_ms) for p, e in unmatched2
        ), trial

    # 50-character boundary: delta 30 matches, delta 85 does not
    prefix = ["x" * 9] * 104
    base = line_snapshot(prefix + ["Arctic", "waters"], stimulus_id="news")
    near = _wef("a", "news", 0, "Arctic", 1040 + 30, 100.0)
    far = _wef("a", "news", 0, "Arctic", 1040 + 85, 100.0)
    assert align_word(near, base, radius=50) is not None
    assert align_word(far, base, radius=50) is None
    ok("merge algebra", "100 fixtures conserved + permutation-invariant; 30/85 boundary")


def _wef(pid, sid, wid, word, char_start, total):
    from wordgaze.mapping import WordEyeFixation

    return WordEyeFixation(pid, sid, wid, word, char_start, total, 0.0, 100.0)


def test_export_round_trip(tmp_path):
    """export -> parse -> export is byte-identical on every fixture."""
    snap, _ = _statement_snapshot()
    plan, _ = _statement_plan(snap)
    inputs = tmp_path / "in"
    inputs.mkdir()
    save_snapshot(snap, inputs / "page.json")
    with open(inputs / "gaze.csv", "w", encoding="utf-8") as fh:
        fh.write("participant,stimulus,time_ms,x,y\n")
        for pid in ("u1", "u2"):
            for s in generate_reading_trace(snap, plan, META, 1.0, participant_id=pid, seed=hash(pid) % 1000):
                fh.write(f"{pid},{s.stimulus_id},{s.t!r},{s.x!r},{s.y!r}\n")
    ws = Workspace(tmp_path / "ws")
    import_data(
        ws, gaze_files=[inputs / "gaze.csv"], snapshot_files=[inputs / "page.json"],
        config=CONFIG,
    )

    fixtures = {
        "empty": export_wef_csv([]),
        "plain": export_csv(ws),
        "aoi": export_csv(ws, QueryFilter.build(aoi_labels=["stmt-A"])),
        "merged": export_csv(ws, QueryFilter.build(merged=True)),
    }
    for name, body in fixtures.items():
        assert export_wef_csv(parse_wef_csv(body)) == body, name
    ok("export round-trip", f"{len(fixtures)} fixtures byte-identical")


SCALE_SAMPLES = 3_000_000
SCALE_STIMULI = 500
SCALE_PARTICIPANTS = 6


def _write_scale_inputs(root: Path) -> tuple[Path, Path]:
    """3M-sample gaze CSV + 500 snapshots, written streaming."""
    from wordgaze.demo import make_demo_snapshot

    rng = random.Random(1)
    snap_dir = root / "snapshots"
    snap_dir.mkdir(parents=True)
    word_lists = []
    for k in range(SCALE_STIMULI):
        snap = make_demo_snapshot(f"s{k:03d}", rng)
        save_snapshot(snap, snap_dir / f"s{k:03d}.json")
        word_lists.append([(w.x + w.w / 2, w.y + w.h / 2) for w in snap.words])

    gaze = root / "gaze.csv"
    per_session = SCALE_SAMPLES // (SCALE_STIMULI * SCALE_PARTICIPANTS)
    with open(gaze, "w", encoding="utf-8", newline="") as fh:
        fh.write("participant,stimulus,time_ms,x,y\n")
        for k in range(SCALE_STIMULI):
            centers = word_lists[k]
            # precompute the per-stimulus suffix lines once; reused verbatim
            # for every participant (sessions are independent)
            lines = []
            t = float(k % 7) * 10_000.0
            emitted = 0
            wi = 0
            while emitted < per_session:
                cx, cy = centers[wi % len(centers)]
                for _ in range(min(80, per_session - emitted)):
                    lines.append(f",s{k:03d},{t!r},{cx!r},{cy!r}\n")
                    t += 4.0
                    emitted += 1
                wi += 7
                if emitted < per_session:  # short saccade hop
                    lines.append(f",s{k:03d},{t!r},2500.0,2500.0\n")
                    t += 4.0
                    emitted += 1
            body_parts = lines
            for p in range(SCALE_PARTICIPANTS):
                pid = f"p{p:02d}"
                fh.writelines(pid + ln for ln in body_parts)
    return gaze, snap_dir


@pytest.mark.slow
def test_scale_import(tmp_path):
    """3M samples, 500 snapshots: import + process via the CLI in under
    120 s and under 1 GB resident."""
    gaze, snap_dir = _write_scale_inputs(tmp_path / "inputs")
    ws_dir = tmp_path / "ws"
    cmd = [
        sys.executable,
        "-m",
        "wordgaze.cli",
        "import",
        "--workspace",
        str(ws_dir),
        "--gaze",
        str(gaze),
        "--snapshots",
        str(snap_dir),
    ]
    t0 = time.monotonic()
    proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    _, status, rusage = os.wait4(proc.pid, 0)
    elapsed = time.monotonic() - t0
    out = proc.stdout.read().decode()
    err = proc.stderr.read().decode()
    assert status == 0, err
    peak_mb = rusage.ru_maxrss / 1024.0  # linux reports KB
    assert f"imported {SCALE_SAMPLES} samples" in out, out
    assert elapsed < 120.0, f"import took {elapsed:.0f}s"
    assert peak_mb < 1024.0, f"peak RSS {peak_mb:.0f} MB"

    ws = Workspace(ws_dir)
    sessions = ws.manifest["sessions"]
    assert len(sessions) == SCALE_STIMULI * SCALE_PARTICIPANTS
    assert all(r["processed"] for r in sessions)
    assert len(ws.manifest["snapshots"]) == SCALE_STIMULI
    ok("scale import", f"{elapsed:.0f}s, peak {peak_mb:.0f} MB")
