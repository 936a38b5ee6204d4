"""Read-only HTTP query service over a processed workspace.

Thin JSON layer on the stdlib threading server: every endpoint resolves to
a :func:`wordgaze.workspace.query` call over immutable data, so concurrent
readers always see identical payloads. Color computation stays client-side
(raw per-word totals plus the served color defaults), so slider changes in
a UI never need a round-trip.
"""
from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .analytics import ColorScaleConfig
from .workspace import QueryFilter, Workspace, export_csv, query

logger = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message
        super().__init__(message)


def _filter_from_params(params: dict[str, list[str]]) -> QueryFilter:
    def multi(name: str) -> frozenset[str] | None:
        if name not in params:
            return None
        values: list[str] = []
        for v in params[name]:
            values.extend(x for x in v.split(",") if x != "")
        return frozenset(values)

    mode = params.get("aoi_mode", ["any"])[0]
    if mode not in ("any", "all"):
        raise ApiError(400, f"aoi_mode must be 'any' or 'all', got {mode!r}")
    merged_raw = params.get("merged", ["false"])[0].lower()
    if merged_raw not in ("true", "false", "1", "0"):
        raise ApiError(400, f"merged must be boolean, got {merged_raw!r}")
    return QueryFilter(
        participants=multi("participant"),
        stimuli=multi("stimulus"),
        aoi_labels=multi("aoi"),
        aoi_mode=mode,
        merged=merged_raw in ("true", "1"),
    )


def _wef_dict(e) -> dict:
    return {
        "word_id": e.word_id,
        "word": e.word,
        "char_start": e.char_start,
        "total_ms": e.total_ms,
        "first_seen_ms": e.first_seen_ms,
        "last_seen_ms": e.last_seen_ms,
    }


def _session_dict(v, include_words: bool) -> dict:
    d = {
        "participant": v.participant_id,
        "stimulus": v.stimulus_id,
        "chrono_index": v.chrono_index,
        "start_ms": v.start_ms,
        "end_ms": v.end_ms,
        "layout_hash": v.layout_hash,
        "processed": v.processed,
        "visitors": v.visitors,
        "annotation": dict(v.annotation.values) if v.annotation else None,
        "aoi_word_ids": v.aoi_word_ids,
        "metrics": v.metrics.to_dict() if v.metrics else None,
    }
    if include_words:
        d["words"] = [_wef_dict(e) for e in v.entries]
        if v.snapshot is not None:
            d["page"] = {
                "url": v.snapshot.url,
                "viewport_width_px": v.snapshot.viewport_width_px,
                "word_count": v.snapshot.word_count,
                "words": [
                    {
                        "word_id": w.word_id,
                        "text": w.text,
                        "char_start": w.char_start,
                        "labels": sorted(w.labels),
                    }
                    for w in v.snapshot.words
                ],
            }
    return d


def _merged_dict(m) -> dict:
    return {
        "stimulus": m.stimulus_id,
        "base_layout_hash": m.base_layout_hash,
        "contributors": m.contributors,
        "metrics": m.metrics.to_dict() if m.metrics else None,
        "words": [
            {
                "word_id": w.word_id,
                "word": w.word,
                "char_start": w.char_start,
                "total_ms": w.total_ms,
                "contributors": w.contributors,
                "per_participant": {
                    pid: {
                        "total_ms": p.total_ms,
                        "first_seen_ms": p.first_seen_ms,
                        "last_seen_ms": p.last_seen_ms,
                    }
                    for pid, p in sorted(w.per_participant.items())
                },
            }
            for w in m.words
        ],
        "unmatched": [
            {"participant": pid, **_wef_dict(e)} for pid, e in m.unmatched
        ],
    }


class WorkspaceRequestHandler(BaseHTTPRequestHandler):
    server_version = "wordgaze"
    ws: Workspace  # set on the server instance
    ui_dir: Path | None = None

    # -- plumbing ----------------------------------------------------------

    def log_message(self, fmt, *args):  # route through logging, not stderr
        logger.debug("%s - %s", self.address_string(), fmt % args)

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, obj, status: int = 200) -> None:
        body = json.dumps(obj, sort_keys=True, ensure_ascii=False).encode("utf-8")
        self._send(status, body, "application/json; charset=utf-8")

    # -- routing -----------------------------------------------------------

    def do_GET(self):  # noqa: N802 (BaseHTTPRequestHandler API)
        url = urlparse(self.path)
        params = parse_qs(url.query)
        try:
            handler = {
                "/api/participants": self._participants,
                "/api/stimuli": self._stimuli,
                "/api/session": self._session,
                "/api/merged": self._merged,
                "/api/table": self._table,
                "/api/export.csv": self._export,
                "/api/labels": self._labels,
                "/api/config": self._config,
            }.get(url.path)
            if handler is not None:
                handler(params)
            elif self.ui_dir is not None:
                self._static(url.path)
            else:
                raise ApiError(404, f"unknown endpoint {url.path}")
        except ApiError as exc:
            self._send_json({"error": exc.message}, status=exc.status)
        except Exception as exc:  # keep serving; surface the diagnostic
            logger.exception("request failed: %s", self.path)
            self._send_json({"error": f"internal error: {exc}"}, status=500)

    # -- endpoints ----------------------------------------------------------

    def _participants(self, params) -> None:
        self._send_json({"participants": self.ws.participants()})

    def _stimuli(self, params) -> None:
        f = _filter_from_params(params)
        visitors = self.ws.visitor_counts()
        records = self.ws.sessions_for(f.participants, None)
        if f.participants is not None:
            by_order: dict[str, float] = {}
            for r in sorted(records, key=lambda r: r["start_ms"]):
                by_order.setdefault(r["stimulus_id"], r["start_ms"])
            sids = sorted(by_order, key=lambda s: (by_order[s], s))
        else:
            sids = self.ws.stimuli()
        self._send_json(
            {
                "stimuli": [
                    {"stimulus": s, "visitors": visitors.get(s, 0)} for s in sids
                ]
            }
        )

    def _session(self, params) -> None:
        if "participant" not in params or "stimulus" not in params:
            raise ApiError(400, "session requires participant= and stimulus=")
        f = _filter_from_params(params)
        result = query(self.ws, f)
        if not result.sessions and result.not_found:
            raise ApiError(404, "; ".join(result.not_found))
        self._send_json(
            {
                "sessions": [_session_dict(v, include_words=True) for v in result.sessions],
                "not_found": result.not_found,
            }
        )

    def _merged(self, params) -> None:
        if "stimulus" not in params:
            raise ApiError(400, "merged requires stimulus=")
        f = _filter_from_params(params)
        f = QueryFilter(f.participants, f.stimuli, f.aoi_labels, f.aoi_mode, True)
        result = query(self.ws, f)
        self._send_json(
            {
                "merged": [_merged_dict(m) for m in result.merged],
                "not_found": result.not_found,
            }
        )

    def _table(self, params) -> None:
        f = _filter_from_params(params)
        granularity = params.get("granularity", ["session"])[0]
        if granularity not in ("session", "word"):
            raise ApiError(400, f"granularity must be 'session' or 'word', got {granularity!r}")
        result = query(self.ws, f, table_granularity=granularity)
        self._send_json({"rows": result.table, "not_found": result.not_found})

    def _export(self, params) -> None:
        f = _filter_from_params(params)
        body = export_csv(self.ws, f)
        self._send(200, body, "text/csv; charset=utf-8")

    def _labels(self, params) -> None:
        from .snapshot import css_vocabulary

        sids = params.get("stimulus")
        vocab: dict[str, int] = {}
        entries = self.ws.manifest["snapshots"]
        for layout_hash in sorted(entries):
            if sids and entries[layout_hash]["stimulus_id"] not in sids:
                continue
            snap = self.ws.snapshot_by_hash(layout_hash)
            for label, count in css_vocabulary(snap).items():
                vocab[label] = vocab.get(label, 0) + count
        self._send_json(
            {"labels": [{"label": k, "words": vocab[k]} for k in sorted(vocab)]}
        )

    def _config(self, params) -> None:
        self._send_json(
            {
                "color_scale": ColorScaleConfig().to_dict(),
                "params": self.ws.manifest.get("params", {}),
            }
        )

    # -- static UI ----------------------------------------------------------

    _MIME = {
        ".html": "text/html; charset=utf-8",
        ".js": "text/javascript; charset=utf-8",
        ".css": "text/css; charset=utf-8",
        ".json": "application/json; charset=utf-8",
        ".svg": "image/svg+xml",
    }

    def _static(self, path: str) -> None:
        assert self.ui_dir is not None
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            raise ApiError(404, f"not found: {path}")
        self._send(200, target.read_bytes(), self._MIME.get(target.suffix, "application/octet-stream"))


def serve(
    ws: Workspace,
    host: str = "127.0.0.1",
    port: int = 8040,
    *,
    ui_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """Start the query service; returns the running server.

    The caller owns shutdown (``server.shutdown()``); request handling is
    threaded and strictly read-only.
    """
    handler = type(
        "BoundHandler",
        (WorkspaceRequestHandler,),
        {"ws": ws, "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    try:
        server = ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        raise RuntimeError(f"cannot bind {host}:{port}: {exc}") from exc
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    logger.info("serving workspace %s on http://%s:%d", ws.root, host, server.server_address[1])
    return server


__all__ = ["ApiError", "WorkspaceRequestHandler", "serve"]
