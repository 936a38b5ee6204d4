from __future__ import annotations

import json
import threading
import urllib.request
from urllib.error import HTTPError

import pytest

from wordgaze.demo import build_demo_workspace
from wordgaze.server import serve


@pytest.fixture(scope="module")
def running(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo")
    ws = build_demo_workspace(root, participants=2, stimuli=3, seed=5)
    server = serve(ws, host="127.0.0.1", port=0)
    port = server.server_address[1]
    yield f"http://127.0.0.1:{port}", ws
    server.shutdown()


def get(base, path):
    with urllib.request.urlopen(base + path, timeout=10) as resp:
        return resp.status, resp.read()


def get_json(base, path):
    status, body = get(base, path)
    return status, json.loads(body)


class TestEndpoints:
    def test_participants(self, running):
        base, ws = running
        status, doc = get_json(base, "/api/participants")
        assert status == 200
        assert doc["participants"] == ws.participants()

    def test_stimuli_with_visitor_counts(self, running):
        base, ws = running
        status, doc = get_json(base, "/api/stimuli")
        assert status == 200
        counts = ws.visitor_counts()
        assert {s["stimulus"]: s["visitors"] for s in doc["stimuli"]} == counts

    def test_session_payload(self, running):
        base, ws = running
        pid = ws.participants()[0]
        sid = ws.sessions_for(frozenset([pid]), None)[0]["stimulus_id"]
        status, doc = get_json(base, f"/api/session?participant={pid}&stimulus={sid}")
        assert status == 200
        sess = doc["sessions"][0]
        assert sess["participant"] == pid
        assert sess["words"]
        assert sess["page"]["words"]
        assert sess["metrics"]["fixation_time_ms"] > 0

    def test_labels(self, running):
        base, _ = running
        status, doc = get_json(base, "/api/labels")
        labels = {l["label"] for l in doc["labels"]}
        assert "title" in labels and "abstract" in labels

    def test_merged(self, running):
        base, ws = running
        sid = max(ws.visitor_counts(), key=lambda s: ws.visitor_counts()[s])
        status, doc = get_json(base, f"/api/merged?stimulus={sid}")
        assert status == 200
        assert doc["merged"][0]["contributors"] == ws.visitor_counts()[sid]

    def test_table(self, running):
        base, _ = running
        status, doc = get_json(base, "/api/table")
        assert status == 200
        assert doc["rows"]

    def test_config(self, running):
        base, _ = running
        status, doc = get_json(base, "/api/config")
        assert doc["color_scale"]["scan_max_ms"] == 100.0
        assert doc["color_scale"]["heat_max_ms"] == 800.0
        assert "idt_dispersion_px" in doc["params"]

    def test_export_matches_table_sources(self, running):
        base, _ = running
        status, body = get(base, "/api/export.csv")
        assert status == 200
        assert body.startswith(b"participant,stimulus,word,")

    def test_malformed_filter_is_4xx_and_service_survives(self, running):
        base, _ = running
        with pytest.raises(HTTPError) as exc:
            get(base, "/api/session?participant=a")  # missing stimulus
        assert exc.value.code == 400
        with pytest.raises(HTTPError) as exc2:
            get(base, "/api/table?merged=banana")
        assert exc2.value.code == 400
        status, _ = get_json(base, "/api/participants")
        assert status == 200

    def test_unknown_endpoint_404(self, running):
        base, _ = running
        with pytest.raises(HTTPError) as exc:
            get(base, "/api/nope")
        assert exc.value.code == 404

    def test_unknown_id_404_with_diagnostic(self, running):
        base, _ = running
        with pytest.raises(HTTPError) as exc:
            get(base, "/api/session?participant=ghost&stimulus=void")
        assert exc.value.code == 404
        body = json.loads(exc.value.read())
        assert "ghost" in body["error"]

    def test_concurrent_identical_queries(self, running):
        base, _ = running
        path = "/api/table"
        results: list[bytes] = []
        lock = threading.Lock()

        def worker():
            _, body = get(base, path)
            with lock:
                results.append(body)

        threads = [threading.Thread(target=worker) for _ in range(100)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(results) == 100
        assert len(set(results)) == 1

    def test_read_only_no_mutation(self, running):
        base, ws = running
        before = ws.manifest_path.read_bytes()
        for path in ("/api/participants", "/api/table", "/api/export.csv", "/api/config"):
            get(base, path)
        assert ws.manifest_path.read_bytes() == before
