"""The frontend's golden fixtures are generated from this engine; this
test regenerates them in memory and fails if the checked-in files have
drifted from engine behavior."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

FRONTEND = Path(__file__).resolve().parent.parent / "frontend"
FIXTURES = FRONTEND / "tests" / "fixtures"
SCRIPTS = FRONTEND / "scripts"


@pytest.fixture(autouse=True)
def _gen_module():
    sys.path.insert(0, str(SCRIPTS))
    yield
    sys.path.remove(str(SCRIPTS))


def test_color_golden_in_sync():
    import gen_fixtures

    expected = json.dumps(gen_fixtures.color_golden(), indent=1, sort_keys=True)
    on_disk = (FIXTURES / "color_golden.json").read_text(encoding="utf-8")
    assert on_disk == expected, "regenerate with: python frontend/scripts/gen_fixtures.py"


def test_merged_fixture_in_sync():
    import gen_fixtures

    expected = json.dumps(gen_fixtures.merged_fixture(), indent=1, sort_keys=True)
    on_disk = (FIXTURES / "merged_fixture.json").read_text(encoding="utf-8")
    assert on_disk == expected, "regenerate with: python frontend/scripts/gen_fixtures.py"
