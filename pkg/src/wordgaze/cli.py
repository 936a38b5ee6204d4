"""Command-line entry points: import, process, export, validate, serve,
and a synthetic demo-workspace generator."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .fixation import IdtParams
from .ingest import IngestConfig
from .validation import compare_aoi_series, read_reference_csv
from .workspace import (
    ProcessingParams,
    QueryFilter,
    Workspace,
    export_csv,
    import_data,
    process_workspace,
    query,
)

logger = logging.getLogger(__name__)


def _add_workspace_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workspace", "-w", required=True, help="workspace directory")


def _add_filter_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--participant", action="append", help="participant id (repeatable)")
    p.add_argument("--stimulus", action="append", help="stimulus id (repeatable)")
    p.add_argument("--aoi", action="append", help="AOI label (repeatable)")
    p.add_argument("--aoi-mode", choices=("any", "all"), default="any")
    p.add_argument("--merged", action="store_true", help="merge participants per stimulus")


def _filter_from_args(args) -> QueryFilter:
    return QueryFilter.build(
        participants=args.participant,
        stimuli=args.stimulus,
        aoi_labels=args.aoi,
        aoi_mode=args.aoi_mode,
        merged=args.merged,
    )


def _params_from_args(args, base: ProcessingParams) -> ProcessingParams:
    idt = base.idt
    if args.idt_dispersion_px is not None or args.idt_min_duration_ms is not None:
        idt = IdtParams(
            args.idt_dispersion_px
            if args.idt_dispersion_px is not None
            else idt.dispersion_threshold_px,
            args.idt_min_duration_ms
            if args.idt_min_duration_ms is not None
            else idt.min_duration_ms,
        )
    return ProcessingParams(
        idt=idt,
        slop_px=args.slop_px if args.slop_px is not None else base.slop_px,
        merge_radius_chars=base.merge_radius_chars,
        centroid_mode=getattr(args, "centroid_mode", False) or base.centroid_mode,
    )


def _add_param_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--idt-dispersion-px", type=float, default=None)
    p.add_argument("--idt-min-duration-ms", type=float, default=None)
    p.add_argument("--slop-px", type=float, default=None, help="word box expansion in px")
    p.add_argument(
        "--centroid-mode",
        action="store_true",
        help="credit dwell at fixation centroids instead of per sample",
    )


def cmd_import(args) -> int:
    ws = Workspace(args.workspace)
    config = IngestConfig.from_json(args.config) if args.config else ws.ingest_config
    params = _params_from_args(args, ws.params)
    result = import_data(
        ws,
        gaze_files=args.gaze or [],
        snapshot_files=_expand_snapshots(args.snapshots),
        annotations_file=args.annotations,
        config=config,
        params=params,
        scroll_log_file=args.scroll_log,
    )
    if result.no_op:
        print("no-op: all inputs already imported")
        return 0
    print(
        f"imported {result.samples_imported} samples into "
        f"{result.sessions_imported} sessions "
        f"({result.sessions_processed} processed, "
        f"{result.snapshots_imported} snapshots, "
        f"{result.rows_skipped} rows skipped)"
    )
    for w in result.warnings:
        print(f"  warning: {w}", file=sys.stderr)
    return 0


def _expand_snapshots(spec: str | None) -> list[Path]:
    if not spec:
        return []
    p = Path(spec)
    if p.is_dir():
        return sorted(p.glob("*.json"))
    return [p]


def cmd_process(args) -> int:
    ws = Workspace(args.workspace)
    params = _params_from_args(args, ws.params)
    n = process_workspace(ws, params)
    print(f"processed {n} sessions with {params.to_dict()}")
    return 0


def cmd_export(args) -> int:
    ws = Workspace(args.workspace)
    body = export_csv(ws, _filter_from_args(args))
    if args.out and args.out != "-":
        Path(args.out).write_bytes(body)
        print(f"wrote {args.out}")
    else:
        sys.stdout.buffer.write(body)
    return 0


def cmd_validate(args) -> int:
    ws = Workspace(args.workspace)
    reference = read_reference_csv(args.reference)
    f = QueryFilter.build(aoi_labels=args.aoi or [], aoi_mode=args.aoi_mode)
    result = query(ws, f)
    engine: dict[str, float] = {}
    for v in result.sessions:
        if v.metrics is not None:
            engine[v.stimulus_id] = engine.get(v.stimulus_id, 0.0) + v.metrics.fixation_time_ms
    engine_s = {sid: ms / 1000.0 for sid, ms in engine.items()}
    report = compare_aoi_series(reference, engine_s)
    print(report.format_table())
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), indent=1, sort_keys=True), encoding="utf-8"
        )
        print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    ws = Workspace(args.workspace)
    server = serve(ws, host=args.host, port=args.port, ui_dir=args.ui)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} (Ctrl-C to stop)")
    try:
        import threading

        threading.Event().wait()
    except KeyboardInterrupt:
        print("shutting down")
        server.shutdown()
    return 0


def cmd_synth(args) -> int:
    from .demo import build_demo_workspace

    ws = build_demo_workspace(
        args.workspace,
        participants=args.participants,
        stimuli=args.stimuli,
        seed=args.seed,
    )
    print(f"demo workspace at {ws.root}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wordgaze",
        description="Word-level gaze analytics: import tracker logs + page "
        "snapshots, detect fixations, aggregate per-word dwell, query/export.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="import gaze CSVs, snapshots, annotations")
    _add_workspace_arg(p)
    p.add_argument("--gaze", nargs="*", help="gaze CSV files")
    p.add_argument("--snapshots", help="snapshot file or directory of *.json")
    p.add_argument("--annotations", help="annotation sidecar JSON")
    p.add_argument("--scroll-log", help="scroll-event CSV (time_ms,scroll_x,scroll_y)")
    p.add_argument("--config", help="ingest config JSON (frame, rate, columns)")
    _add_param_args(p)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("process", help="re-run fixation detection + word mapping")
    _add_workspace_arg(p)
    _add_param_args(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("export", help="export word-eye-fixations as CSV")
    _add_workspace_arg(p)
    _add_filter_args(p)
    p.add_argument("--out", "-o", help="output file (default: stdout)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("validate", help="compare AOI dwell to a reference series")
    _add_workspace_arg(p)
    p.add_argument("--reference", required=True, help="CSV of stimulus_id,seconds")
    p.add_argument("--aoi", action="append", help="AOI label (repeatable)")
    p.add_argument("--aoi-mode", choices=("any", "all"), default="any")
    p.add_argument("--out", help="write the report as JSON here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="start the read-only query service")
    _add_workspace_arg(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--ui", help="serve a built UI directory at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="build a small synthetic demo workspace")
    _add_workspace_arg(p)
    p.add_argument("--participants", type=int, default=3)
    p.add_argument("--stimuli", type=int, default=4)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:
        if args.verbose:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
