"""Generate the cross-implementation golden fixtures consumed by the
frontend tests. The engine is the source of truth; the TypeScript side
must reproduce these exactly.

Run from the repository root:  python frontend/scripts/gen_fixtures.py
"""
from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

from wordgaze.analytics import ColorScaleConfig, color_for, css_color
from wordgaze.demo import build_demo_workspace
from wordgaze.server import _merged_dict, _session_dict
from wordgaze.workspace import QueryFilter, query

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def color_golden() -> list[dict]:
    configs = [
        {"scan_max_ms": 100.0, "heat_min_ms": 100.0, "heat_max_ms": 800.0},
        {"scan_max_ms": 122.0, "heat_min_ms": 122.0, "heat_max_ms": 800.0},
        {"scan_max_ms": 50.0, "heat_min_ms": 80.0, "heat_max_ms": 300.0},
        {"scan_max_ms": 100.0, "heat_min_ms": 100.0, "heat_max_ms": 2000.0},
    ]
    totals = [0.0, 1.0, 49.9, 50.0, 100.0, 100.1, 122.0, 123.0, 150.0, 200.0,
              350.0, 425.5, 500.0, 640.0, 799.9, 800.0, 801.0, 1500.0, 5240.8]
    cases = []
    for raw in configs:
        cfg = ColorScaleConfig(**raw)
        for total in totals:
            a = color_for(total, cfg)
            cases.append(
                {
                    "total_ms": total,
                    "cfg": raw,
                    "category": a.category,
                    "heat_fraction": a.heat_fraction,
                    "css": css_color(a, cfg),
                }
            )
    return cases


def merged_fixture() -> dict:
    with tempfile.TemporaryDirectory() as tmp:
        ws = build_demo_workspace(Path(tmp) / "ws", participants=3, stimuli=1, seed=21)
        sid = ws.stimuli()[0]
        individual = query(ws, QueryFilter.build(stimuli=[sid]))
        merged = query(ws, QueryFilter.build(stimuli=[sid], merged=True))
        return {
            "stimulus": sid,
            "sessions": [_session_dict(v, include_words=True) for v in individual.sessions],
            "merged": _merged_dict(merged.merged[0]),
        }


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "color_golden.json").write_text(
        json.dumps(color_golden(), indent=1, sort_keys=True), encoding="utf-8"
    )
    (OUT / "merged_fixture.json").write_text(
        json.dumps(merged_fixture(), indent=1, sort_keys=True), encoding="utf-8"
    )
    print(f"wrote fixtures into {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
