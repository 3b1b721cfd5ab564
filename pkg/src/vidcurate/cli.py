"""Command-line entry point.

Subcommands: ``ingest``, ``segment``, ``score``, ``filter``, ``stratify``,
``stats``, ``geom shape|tiles|check``, ``mock-scorer``. Every successful run
prints a one-line JSON summary to stdout; logs go to stderr. Exit codes:
0 success, 1 usage error, 2 I/O error, 3 scorer/protocol error,
4 validation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import geometry, ingest, stats as stats_mod, stratify as stratify_mod
from .config import RunConfig, load_config
from .errors import (
    ConfigError,
    ExternalToolError,
    FramePackError,
    ManifestError,
    PipelineError,
    ProtocolError,
    ScorerError,
    ValidationError,
)
from .filterpipe import STAGE_NAMES, MediaStore, run_pipeline, write_outcome
from .manifest import MediaItem, load_manifest, write_manifest
from .scenedetect import segment_pack
from .scorers import MediaRef, ScoreRequest, ScorerClient, serve_mock

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_SCORER = 3
EXIT_VALIDATION = 4

# score subcommand: scorer-backed task -> (metric key, media kind)
SCORABLE = {
    "aesthetic": ("aesthetic", "image"),
    "dover": ("dover", "video"),
    "lpips_consistency": ("lpips", "video"),
    "unimatch_motion": ("unimatch", "video"),
    "text_area": ("text_area_pct", "image"),
    "watermark_area": ("watermark_area_pct", "image"),
}
# computed in-process from the record's frames, no scorer involved
BUILTIN_TASKS = ("motion_proxy", "consistency_proxy", "brightness")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); keep our code table
        raise UsageError(message)


def _emit(summary: dict, sort_keys: bool = True) -> None:
    print(json.dumps(summary, sort_keys=sort_keys, separators=(",", ":")))


def _client(cfg: RunConfig, endpoint: str | None) -> ScorerClient | None:
    url = endpoint or cfg.scorer.endpoint
    if url is None and not cfg.scorer.endpoints:
        return None
    return ScorerClient(
        default_endpoint=url,
        endpoints=cfg.scorer.endpoints,
        retries=cfg.scorer.retries,
        backoff_ms=cfg.scorer.backoff_ms,
        timeout_s=cfg.scorer.timeout_ms / 1000.0,
    )


def _cmd_ingest(args, cfg: RunConfig) -> dict:
    if args.video is not None:
        if not args.template:
            raise ValidationError("--video requires --template")
        pack = ingest.decode_external(args.video, args.template, target_fps=args.fps)
    else:
        if args.width is None or args.height is None:
            raise ValidationError("--raw requires --width and --height")
        with open(args.raw, "rb") as fh:
            data = fh.read()
        channels = 3 if args.format == "rgb8" else 1
        frame_size = args.width * args.height * channels
        if frame_size == 0 or len(data) % frame_size:
            raise ValidationError(
                f"raw payload of {len(data)} bytes is not a whole number of "
                f"{args.width}x{args.height} {args.format} frames"
            )
        pack = ingest.FramePack(
            width=args.width,
            height=args.height,
            frame_count=len(data) // frame_size,
            fps_num=args.fps,
            fps_den=1,
            pixel_format=ingest.PIXEL_RGB8 if args.format == "rgb8" else ingest.PIXEL_GRAY8,
            data=data,
        )
    written = ingest.write_framepack(pack, args.out)
    return {
        "ok": True,
        "out": str(args.out),
        "bytes": written,
        "frames": pack.frame_count,
        "fps": pack.fps,
    }


def _cmd_segment(args, cfg: RunConfig) -> dict:
    records = load_manifest(args.manifest)
    store = MediaStore(media_root=args.media_root)
    clips = []
    videos = 0
    for rec in records:
        if not isinstance(rec, MediaItem) or rec.kind != "video":
            continue
        videos += 1
        pack = store.pack_for(rec)
        _, found = segment_pack(rec, pack, cfg.segmenter)
        clips.extend(found)
    clips.sort(key=lambda c: c.id)
    count = write_manifest(clips, args.out)
    return {"ok": True, "videos": videos, "clips": count, "out": str(args.out)}


def _cmd_score(args, cfg: RunConfig) -> dict:
    from . import metrics as metrics_mod
    from .ingest import PIXEL_RGB8, pack_to_grayscale

    records = load_manifest(args.manifest)
    tasks = [t.strip() for t in args.tasks.split(",") if t.strip()]
    unknown = [t for t in tasks if t not in SCORABLE and t not in BUILTIN_TASKS]
    if unknown:
        raise ValidationError(
            f"unscorable tasks: {unknown}; choose from {sorted(SCORABLE) + sorted(BUILTIN_TASKS)}"
        )
    client = _client(cfg, args.endpoint)
    if client is None and any(t in SCORABLE for t in tasks):
        raise ScorerError("no scorer endpoint configured", code="config")
    store = MediaStore(media_root=args.media_root, workdir=args.workdir)
    requests_made = 0
    for rec in records:
        for task in tasks:
            if task in BUILTIN_TASKS:
                if getattr(rec.metrics, task, None) is not None and not args.rescore:
                    continue
                if task in ("motion_proxy", "consistency_proxy") and rec.kind != "video":
                    continue
                pack = store.pack_for(rec)
                gray = pack_to_grayscale(pack) if pack.pixel_format == PIXEL_RGB8 else pack
                if task == "brightness":
                    mid = metrics_mod.mid_frame_index(gray.frame_count)
                    value = metrics_mod.brightness(gray.frame(mid))
                elif gray.frame_count < 2:
                    continue
                elif task == "motion_proxy":
                    value = metrics_mod.motion_proxy(gray.as_array())
                else:
                    value = metrics_mod.consistency_proxy(gray.as_array())
                setattr(rec.metrics, task, value)
                continue
            key, media_kind = SCORABLE[task]
            if getattr(rec.metrics, key) is not None and not args.rescore:
                continue
            if media_kind == "video" and rec.kind != "video":
                continue
            path = (
                store.media_path_for(rec)
                if media_kind == "video"
                else store.mid_frame_path_for(rec)
            )
            resp = client.score(ScoreRequest(task=task, media=MediaRef(kind=media_kind, path=path)))
            setattr(rec.metrics, key, resp.value)
            requests_made += 1
    count = write_manifest(records, args.out)
    return {"ok": True, "records": count, "requests": requests_made, "out": str(args.out)}


def _apply_overrides(thresholds, overrides: list[str]):
    """Apply ``field=value`` threshold overrides from the command line.

    Scalar fields set directly; interval bounds via ``duration_lo``,
    ``duration_hi``, ``fps_lo``, ``fps_hi``, ``brightness_lo``,
    ``brightness_hi``, ``unimatch_lo``, ``unimatch_hi``.
    """
    import dataclasses

    from .manifest import Interval

    interval_fields = {
        "duration": "duration_s", "fps": "fps",
        "brightness": "brightness", "unimatch": "unimatch",
    }
    scalar_fields = (
        "min_width", "min_height", "dover_min", "lpips_min",
        "aesthetic_min", "text_area_pct_max", "clip_sim_min",
    )
    for spec in overrides:
        key, sep, raw = spec.partition("=")
        if not sep:
            raise ValidationError(f"override {spec!r} is not of the form field=value")
        try:
            value = float(raw)
        except ValueError as exc:
            raise ValidationError(f"override {spec!r}: {exc}") from exc
        if key in scalar_fields:
            cast = int(value) if key in ("min_width", "min_height") else value
            thresholds = dataclasses.replace(thresholds, **{key: cast})
            continue
        name, _, side = key.rpartition("_")
        if name in interval_fields and side in ("lo", "hi"):
            field = interval_fields[name]
            iv = getattr(thresholds, field) or Interval()
            repl = Interval(
                lo=value if side == "lo" else iv.lo,
                hi=value if side == "hi" else iv.hi,
                lo_open=iv.lo_open, hi_open=iv.hi_open,
            )
            thresholds = dataclasses.replace(thresholds, **{field: repl})
            continue
        raise ValidationError(f"unknown threshold override {key!r}")
    return thresholds


def _cmd_filter(args, cfg: RunConfig) -> dict:
    records = load_manifest(args.manifest)
    parents = {}
    if args.parents:
        parents = {r.id: r for r in load_manifest(args.parents) if isinstance(r, MediaItem)}
    store = MediaStore(media_root=args.media_root, workdir=args.workdir, parents=parents)
    outcome = run_pipeline(
        records,
        stage=args.stage,
        thresholds=_apply_overrides(cfg.stages[args.stage], args.override or []),
        scorer=_client(cfg, args.endpoint),
        store=store,
        segmenter=cfg.segmenter,
        workers=args.workers if args.workers else cfg.workers,
        skip_on_scorer_error=args.skip_on_scorer_error or cfg.skip_on_scorer_error,
        segment_videos=not args.no_segment,
    )
    write_outcome(outcome, args.out, args.dropped, args.decisions, args.summary)
    return {"ok": True, **outcome.summary}


def _cmd_stratify(args, cfg: RunConfig) -> dict:
    records = load_manifest(args.manifest)
    assignments = [stratify_mod.assign_stages(rec, cfg.stages) for rec in records]
    counts = stratify_mod.emit_stage_manifests(assignments, records, args.outdir)
    return {"ok": True, "records": len(records), "counts": counts, "outdir": str(args.outdir)}


def _cmd_stats(args, cfg: RunConfig) -> dict:
    records = load_manifest(args.manifest)
    specs = stats_mod.default_histogram_specs()
    stats = stats_mod.compute_stats(records, specs)
    stats_mod.emit_report(stats, args.out_json, args.out_csv)
    return {
        "ok": True,
        "records": len(records),
        "report": str(args.out_json),
        "csv": str(args.out_csv),
    }


def _cmd_geom(args, cfg: RunConfig) -> dict:
    geo = cfg.geometry
    if args.preset == "320p":
        geo = geometry.GeometryConfig.preset_320p()
    elif args.preset == "720p":
        geo = geometry.GeometryConfig.preset_720p()
    if args.geom_cmd == "shape":
        t, c, h, w = geometry.latent_shape(args.frames, args.height, args.width, geo)
        return {"t": t, "c": c, "h": h, "w": w}
    if args.geom_cmd == "tiles":
        plan = geometry.plan_tiles(args.frames, args.height, args.width, geo, side=args.side)
        return {
            "side": args.side,
            "extents": list(plan.extents),
            "axes": [[[a, b] for a, b in spans] for spans in plan.axes],
            "tiles": plan.tile_count(),
        }
    # geom check
    thresholds = cfg.stages[args.stage]
    frame_count = int(round(args.duration * 30))
    record = MediaItem(
        id="query", kind="video", path="", width=args.width, height=args.height,
        fps=30.0, frame_count=frame_count, duration_s=frame_count / 30.0,
    )
    report = geometry.check_compat(record, geo, thresholds, model_frames=args.model_frames)
    return {"ok": report.ok, "reasons": report.reasons, "stage": args.stage}


def _cmd_mock_scorer(args, cfg: RunConfig) -> dict:
    handle = serve_mock(args.port, args.seed)
    _emit({"ok": True, "port": handle.port, "seed": args.seed})
    sys.stdout.flush()
    try:
        handle.thread.join()
    except KeyboardInterrupt:
        logger.info("stopping mock scorer")
        handle.stop()
    return {}


def build_parser() -> _Parser:
    parser = _Parser(prog="vidcurate", description=__doc__)
    parser.add_argument("--config", help="JSON config path (or $VIDCURATE_CONFIG)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="wrap raw frames or run the external decoder")
    p.add_argument("--video", help="source video for the external decoder template")
    p.add_argument("--template", help="decoder command template with {input} {output} {fps}")
    p.add_argument("--raw", help="raw interleaved frame bytes to wrap")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--format", choices=["rgb8", "gray8"], default="rgb8")
    p.add_argument("--fps", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("segment", help="cut videos in a manifest into scene clips")
    p.add_argument("--in", dest="manifest", required=True)
    p.add_argument("--media-root", default=".")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("score", help="fill metric values from a scorer service")
    p.add_argument("--in", dest="manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tasks", default="aesthetic,text_area,watermark_area")
    p.add_argument("--endpoint")
    p.add_argument("--media-root", default=".")
    p.add_argument("--workdir", default=".vidcurate-work")
    p.add_argument("--rescore", action="store_true")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("filter", help="run the staged filtering pipeline")
    p.add_argument("--stage", required=True, choices=list(STAGE_NAMES))
    p.add_argument("--in", dest="manifest", required=True)
    p.add_argument("--out", required=True, help="kept-records manifest")
    p.add_argument("--dropped")
    p.add_argument("--decisions")
    p.add_argument("--summary")
    p.add_argument("--parents", help="manifest of parent items for clip slicing")
    p.add_argument("--media-root", default=".")
    p.add_argument("--workdir", default=".vidcurate-work")
    p.add_argument("--endpoint")
    p.add_argument("--workers", type=int, default=0, help="0 = use config value")
    p.add_argument("--skip-on-scorer-error", action="store_true")
    p.add_argument(
        "--no-segment",
        action="store_true",
        help="treat raw videos as terminal records instead of cutting clips",
    )
    p.add_argument(
        "--override",
        action="append",
        metavar="FIELD=VALUE",
        help="per-threshold override, e.g. aesthetic_min=5.5 or duration_lo=6",
    )
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("stratify", help="emit per-stage manifests from scored records")
    p.add_argument("--in", dest="manifest", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_stratify)

    p = sub.add_parser("stats", help="dataset statistics report")
    p.add_argument("--in", dest="manifest", required=True)
    p.add_argument("--out-json", required=True)
    p.add_argument("--out-csv", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("geom", help="geometry planning queries")
    geom_sub = p.add_subparsers(dest="geom_cmd", required=True)
    gp = geom_sub.add_parser("shape", help="latent shape of a pixel video")
    gp.add_argument("--frames", type=int, required=True)
    gp.add_argument("--width", type=int, required=True)
    gp.add_argument("--height", type=int, required=True)
    gp.add_argument("--preset", choices=["320p", "720p"])
    gp.set_defaults(func=_cmd_geom)
    gp = geom_sub.add_parser("tiles", help="tile spans for encoder or decoder")
    gp.add_argument("--frames", type=int, required=True)
    gp.add_argument("--width", type=int, required=True)
    gp.add_argument("--height", type=int, required=True)
    gp.add_argument("--side", choices=["encoder", "decoder"], default="decoder")
    gp.add_argument("--preset", choices=["320p", "720p"])
    gp.set_defaults(func=_cmd_geom)
    gp = geom_sub.add_parser("check", help="clip/model compatibility check")
    gp.add_argument("--duration", type=float, required=True)
    gp.add_argument("--width", type=int, required=True)
    gp.add_argument("--height", type=int, required=True)
    gp.add_argument("--stage", default="t2v_finetune", choices=list(STAGE_NAMES))
    gp.add_argument("--model-frames", type=int)
    gp.add_argument("--preset", choices=["320p", "720p"])
    gp.set_defaults(func=_cmd_geom)

    p = sub.add_parser("mock-scorer", help="serve the deterministic mock scorer")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_mock_scorer)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        cfg = load_config(args.config)
        summary = args.func(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValidationError) as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except (ProtocolError, ScorerError, PipelineError, ExternalToolError) as exc:
        logger.error("%s", exc)
        return EXIT_SCORER
    except (ManifestError, FramePackError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_IO
    if summary:
        # geom subcommands print their fields in declaration order.
        _emit(summary, sort_keys=args.command != "geom")
    return EXIT_OK


def console_entry() -> None:
    raise SystemExit(main())
