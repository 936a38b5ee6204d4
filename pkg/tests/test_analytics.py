from __future__ import annotations

import math
from dataclasses import dataclass

import pytest
from hypothesis import given, strategies as st

from conftest import line_snapshot
from wordgaze.analytics import (
    ColorScaleConfig,
    SessionAnnotation,
    WefCsvRow,
    aoi_metrics,
    collapse_runs,
    color_for,
    css_color,
    export_wef_csv,
    format_ms,
    heat_rgb,
    load_annotations,
    parse_wef_csv,
    table_rows,
)
from wordgaze.mapping import WordEyeFixation
from wordgaze.merge import MergedWordFixation, ParticipantDwell


def wef(word_id, total, word="w", char_start=0, pid="p", sid="s", first=0.0, last=50.0):
    return WordEyeFixation(pid, sid, word_id, word, char_start, total, first, last)


class TestColorFor:
    def test_zero_is_uncolored(self):
        assert color_for(0.0).category == "none"

    def test_fifty_ms_is_scan(self):
        c = color_for(50.0)
        assert c.category == "scan"
        assert css_color(c) == "#d8bff0"

    def test_clamps_above_max(self):
        c = color_for(900.0, ColorScaleConfig(heat_max_ms=800.0))
        assert c.category == "heat"
        assert c.heat_fraction == 1.0
        assert css_color(c) == "#ff0000"  # hottest stop

    def test_boundary_at_scan_max(self):
        cfg = ColorScaleConfig()
        assert color_for(100.0, cfg).category == "scan"
        assert color_for(100.0001, cfg).category == "heat"

    def test_slider_raises_threshold(self):
        # coloring only above lexical-access dwell
        cfg = ColorScaleConfig(scan_max_ms=122.0, heat_min_ms=122.0)
        assert color_for(110.0, cfg).category == "scan"
        assert color_for(130.0, cfg).category == "heat"

    @given(
        a=st.floats(0, 2000, allow_nan=False),
        b=st.floats(0, 2000, allow_nan=False),
    )
    def test_monotone(self, a, b):
        cfg = ColorScaleConfig()
        rank = {"none": 0, "scan": 1, "heat": 2}
        ca, cb = color_for(min(a, b), cfg), color_for(max(a, b), cfg)
        assert rank[ca.category] <= rank[cb.category]
        if ca.category == cb.category == "heat":
            assert ca.heat_fraction <= cb.heat_fraction

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            ColorScaleConfig(scan_max_ms=0.0)
        with pytest.raises(ValueError):
            ColorScaleConfig(heat_min_ms=900.0, heat_max_ms=800.0)

    def test_heat_rgb_interpolates(self):
        cfg = ColorScaleConfig()
        assert heat_rgb(0.0, cfg) == (0, 0, 255)
        assert heat_rgb(1.0, cfg) == (255, 0, 0)
        assert heat_rgb(0.125, cfg) == (0, 100, 128)  # halfway blue->green


class TestAoiMetrics:
    @pytest.fixture
    def page(self):
        return line_snapshot(
            [f"word{i}" for i in range(10)],
            labels_by_index={i: ("zone",) for i in range(10)},
        )

    def test_forced_arithmetic(self, page):
        entries = [wef(0, 50.0), wef(1, 150.0), wef(2, 200.0), wef(3, 10.0)]
        m = aoi_metrics(entries, page, {"zone"})
        assert m.fixation_time_ms == 410.0
        assert m.words_fixated == 4
        assert m.percent_words_fixated == pytest.approx(0.4)
        assert m.word_count_in_aoi == 10
        assert m.chars_fixated == sum(len(f"word{i}") for i in range(4))

    def test_all_fixated_is_full(self, page):
        entries = [wef(i, 100.0) for i in range(10)]
        m = aoi_metrics(entries, page, {"zone"})
        assert m.percent_words_fixated == 1.0

    def test_whole_page_when_no_labels(self, page):
        entries = [wef(0, 50.0), wef(9, 70.0)]
        m = aoi_metrics(entries, page, ())
        assert m.fixation_time_ms == 120.0
        assert m.word_count_in_aoi == 10

    def test_empty_aoi(self, page):
        m = aoi_metrics([], page, {"nosuch"})
        assert m.word_count_in_aoi == 0
        assert m.percent_words_fixated == 0.0

    def test_additive_over_disjoint_aois(self):
        page = line_snapshot(
            ["a", "b", "c", "d"],
            labels_by_index={0: ("one",), 1: ("one",), 2: ("two",), 3: ("two",)},
        )
        entries = [wef(0, 10.0), wef(2, 20.0), wef(3, 40.0)]
        m1 = aoi_metrics(entries, page, {"one"})
        m2 = aoi_metrics(entries, page, {"two"})
        mu = aoi_metrics(entries, page, {"one", "two"})
        assert mu.fixation_time_ms == m1.fixation_time_ms + m2.fixation_time_ms
        assert mu.words_fixated == m1.words_fixated + m2.words_fixated


class TestCollapse:
    @pytest.fixture
    def page(self):
        return line_snapshot([f"w{i}" for i in range(5)])

    def test_disabled_threshold(self, page):
        segments = collapse_runs(page, [wef(0, 200.0)], math.inf)
        assert len(segments) == 5
        assert all(s.kind == "word" for s in segments)

    def test_pattern_f_nnn_f(self, page):
        entries = [wef(0, 200.0), wef(4, 300.0)]
        segs3 = collapse_runs(page, entries, 3)
        assert [s.kind for s in segs3] == ["word", "ellipsis", "word"]
        assert segs3[1].hidden_count == 3
        segs4 = collapse_runs(page, entries, 4)
        assert [s.kind for s in segs4] == ["word"] * 5

    def test_fully_unviewed(self, page):
        segs = collapse_runs(page, [], 1)
        assert len(segs) == 1
        assert segs[0].kind == "ellipsis" and segs[0].hidden_count == 5

    def test_word_conservation(self, page):
        entries = [wef(1, 120.0), wef(2, 90.0)]
        for threshold in (1, 2, 3, math.inf):
            segs = collapse_runs(page, entries, threshold)
            visible = sum(1 for s in segs if s.kind == "word")
            hidden = sum(s.hidden_count for s in segs if s.kind == "ellipsis")
            assert visible + hidden == page.word_count

    def test_colors_attached(self, page):
        segs = collapse_runs(page, [wef(0, 500.0), wef(1, 50.0)], math.inf)
        assert segs[0].color.category == "heat"
        assert segs[1].color.category == "scan"
        assert segs[2].color.category == "none"

    def test_bad_threshold(self, page):
        with pytest.raises(ValueError):
            collapse_runs(page, [], 0)


@dataclass
class FakeSession:
    participant_id: str
    stimulus_id: str
    start_ms: float
    entries: list
    snapshot: object


class TestTableRows:
    def make_sessions(self):
        page = line_snapshot(["a", "b", "c"])
        sessions = []
        for pid in ("p1", "p2"):
            for i, sid in enumerate(("s1", "s2", "s3")):
                sessions.append(
                    FakeSession(pid, sid, 1000.0 * i, [wef(0, 100.0, pid=pid, sid=sid)], page)
                )
        return sessions

    def test_two_by_three(self):
        rows = table_rows(self.make_sessions())
        assert len(rows) == 6
        assert [r["participant"] for r in rows] == ["p1"] * 3 + ["p2"] * 3
        assert [r["chrono_index"] for r in rows] == [0, 1, 2, 0, 1, 2]

    def test_annotations_become_columns(self):
        sessions = self.make_sessions()
        ann = {
            ("p1", "s1"): SessionAnnotation("p1", "s1", {"task_type": "B", "usefulness": 1}),
        }
        rows = table_rows(sessions, ann)
        assert rows[0]["task_type"] == "B"
        assert rows[0]["usefulness"] == 1
        assert rows[1]["task_type"] == ""  # missing values stay empty

    def test_chronological_order_within_participant(self):
        page = line_snapshot(["a"])
        sessions = [
            FakeSession("p", "late", 5000.0, [], page),
            FakeSession("p", "early", 100.0, [], page),
        ]
        rows = table_rows(sessions)
        assert [r["stimulus"] for r in rows] == ["early", "late"]

    def test_stable_sort_by_fixation_time(self):
        rows = table_rows(self.make_sessions())
        by_time = sorted(rows, key=lambda r: -r["fixation_time_ms"])
        # equal keys keep base order: stability check
        assert [r["stimulus"] for r in by_time] == [r["stimulus"] for r in rows]


class TestExportCsv:
    def test_empty_set_is_header_only(self):
        assert export_wef_csv([]) == (
            b"participant,stimulus,word,char_start,total_ms,first_seen_ms,last_seen_ms\n"
        )

    def test_round_trip_byte_identical(self):
        entries = [
            wef(0, 120.0, word="Methane", char_start=0, first=0.0, last=116.0),
            wef(1, 2562.4, word="clathrates", char_start=8, first=120.0, last=2800.5),
        ]
        exported = export_wef_csv(entries)
        parsed = parse_wef_csv(exported)
        again = export_wef_csv(parsed)
        assert exported == again

    def test_merged_round_trip(self):
        m = MergedWordFixation(
            word_id=3,
            word="Arctic",
            char_start=40,
            total_ms=500.0,
            per_participant={
                "a": ParticipantDwell(200.0, 0.0, 90.0),
                "b": ParticipantDwell(300.0, 10.0, 80.0),
            },
        )
        exported = export_wef_csv([m], stimulus_id="news")
        parsed = parse_wef_csv(exported)
        assert parsed[0].contributors == 2
        assert parsed[0].per_participant_ms == "a=200;b=300"
        assert export_wef_csv(parsed) == exported

    def test_ms_precision_one_decimal(self):
        row = parse_wef_csv(export_wef_csv([wef(0, 2562.4)]))[0]
        assert row.total_ms == 2562.4
        assert format_ms(2562.44) == "2562.4"
        assert format_ms(120.0) == "120"

    def test_quoting_words_with_commas(self):
        entries = [wef(0, 10.0, word='he,llo"x')]
        parsed = parse_wef_csv(export_wef_csv(entries))
        assert parsed[0].word == 'he,llo"x'


def test_load_annotations(tmp_path):
    p = tmp_path / "ann.json"
    p.write_text(
        '[{"participant": "p1", "stimulus": "s1", "task_type": "B", "usefulness": 1}]',
        encoding="utf-8",
    )
    ann = load_annotations(p)
    assert ann[("p1", "s1")].values == {"task_type": "B", "usefulness": 1}


class TestWordGranularity:
    def test_word_rows(self):
        page = line_snapshot(
            ["alpha", "beta", "gamma"],
            labels_by_index={0: ("zone",), 1: ("zone",), 2: ("other",)},
        )
        sessions = [
            FakeSession("p1", "s1", 0.0,
                        [wef(0, 100.0, word="alpha", char_start=0),
                         wef(2, 70.0, word="gamma", char_start=11)],
                        page),
        ]
        rows = table_rows(sessions, granularity="word")
        assert [(r["word"], r["total_ms"]) for r in rows] == [("alpha", 100.0), ("gamma", 70.0)]
        aoi_rows = table_rows(sessions, aoi_labels={"zone"}, granularity="word")
        assert [r["word"] for r in aoi_rows] == ["alpha"]

    def test_bad_granularity(self):
        with pytest.raises(ValueError):
            table_rows([], granularity="paragraph")
