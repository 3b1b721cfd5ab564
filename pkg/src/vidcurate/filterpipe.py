"""The staged filtering chain: prefilter, segmentation, metric gates,
artifact gate, captioning and similarity gate, with a complete decision audit.

Steps run in the fixed order duration/FPS/resolution -> scene segmentation
(raw videos only) -> brightness/clarity/consistency/motion -> aesthetics ->
artifacts -> coarse captioning -> CLIP-similarity gate -> fine captioning.
Evaluation of an item stops at its first failed check; checks that were
never reached are logged as skipped, and no scorer request is issued for
them. Metric values already present on a record are trusted and not
re-requested, which is how pre-scored manifests (the ``score`` subcommand's
output) flow through without a scorer.

Items are processed by a bounded worker pool; results are collected and
sorted by id, so outputs are byte-identical regardless of scheduling.
"""

from __future__ import annotations

import copy
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .annotate import assemble_caption_set, build_fine_instruction
from .errors import PipelineError, ScorerError, ValidationError
from .ingest import FramePack, read_framepack, write_framepack
from .manifest import (
    CaptionSet,
    ClipRecord,
    CoarseCaption,
    CropRect,
    DecisionRecord,
    Interval,
    MediaItem,
    Record,
    write_decisions,
    write_manifest,
)
from .scenedetect import SegmenterConfig, segment_pack
from .scorers import MediaRef, ScoreRequest, ScorerClient

logger = logging.getLogger(__name__)

STAGE_NAMES = ("t2i_pretrain", "t2v_pretrain_360p", "t2v_pretrain_720p", "t2v_finetune")

# Fraction of each frame edge treated as the border band by the artifact
# gate's crop rule.
MARGIN_FRACTION = 0.10


@dataclass
class StageThresholds:
    """One training stage's filter thresholds (defaults reproduce the
    published per-stage table exactly; see ``default_stage_thresholds``)."""

    stage: str
    duration_s: Interval | None
    fps: Interval | None
    min_width: int
    min_height: int
    brightness: Interval
    dover_min: float | None
    lpips_min: float | None
    unimatch: Interval | None
    aesthetic_min: float
    text_area_pct_max: float
    clip_sim_min: float

    def validate(self) -> list[str]:
        problems = []
        if self.stage not in STAGE_NAMES:
            problems.append(f"unknown stage {self.stage!r}")
        for name in ("duration_s", "fps", "brightness", "unimatch"):
            iv = getattr(self, name)
            if iv is not None and iv.is_empty():
                problems.append(f"{name} interval is empty")
        for name in ("min_width", "min_height"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        return problems

    def to_json(self) -> dict:
        d: dict = {"stage": self.stage}
        d["duration_s"] = self.duration_s.to_json() if self.duration_s else None
        d["fps"] = self.fps.to_json() if self.fps else None
        d["min_width"] = self.min_width
        d["min_height"] = self.min_height
        d["brightness"] = self.brightness.to_json()
        d["dover_min"] = self.dover_min
        d["lpips_min"] = self.lpips_min
        d["unimatch"] = self.unimatch.to_json() if self.unimatch else None
        d["aesthetic_min"] = self.aesthetic_min
        d["text_area_pct_max"] = self.text_area_pct_max
        d["clip_sim_min"] = self.clip_sim_min
        return d

    @classmethod
    def from_json(cls, d: dict) -> "StageThresholds":
        def iv(key):
            v = d.get(key)
            return Interval.from_json(v) if v is not None else None

        return cls(
            stage=d["stage"],
            duration_s=iv("duration_s"),
            fps=iv("fps"),
            min_width=d["min_width"],
            min_height=d["min_height"],
            brightness=Interval.from_json(d["brightness"]),
            dover_min=d.get("dover_min"),
            lpips_min=d.get("lpips_min"),
            unimatch=iv("unimatch"),
            aesthetic_min=d["aesthetic_min"],
            text_area_pct_max=d["text_area_pct_max"],
            clip_sim_min=d["clip_sim_min"],
        )


def default_stage_thresholds() -> dict[str, StageThresholds]:
    """The four stage columns: duration closed, FPS open, resolution/metric minimums."""
    fps = Interval(23, 61, lo_open=True, hi_open=True)
    bright = Interval(20, 180)
    return {
        "t2i_pretrain": StageThresholds(
            stage="t2i_pretrain",
            duration_s=None, fps=None,
            min_width=640, min_height=368,
            brightness=bright, dover_min=None, lpips_min=None, unimatch=None,
            aesthetic_min=4.8, text_area_pct_max=0.05, clip_sim_min=0.17,
        ),
        "t2v_pretrain_360p": StageThresholds(
            stage="t2v_pretrain_360p",
            duration_s=Interval(2, 16), fps=fps,
            min_width=640, min_height=368,
            brightness=bright, dover_min=None, lpips_min=None, unimatch=None,
            aesthetic_min=4.8, text_area_pct_max=0.05, clip_sim_min=0.17,
        ),
        "t2v_pretrain_720p": StageThresholds(
            stage="t2v_pretrain_720p",
            duration_s=Interval(2, 16), fps=fps,
            min_width=1280, min_height=720,
            brightness=bright, dover_min=None, lpips_min=None, unimatch=None,
            aesthetic_min=5.0, text_area_pct_max=0.05, clip_sim_min=0.20,
        ),
        "t2v_finetune": StageThresholds(
            stage="t2v_finetune",
            duration_s=Interval(6, 16), fps=fps,
            min_width=1280, min_height=720,
            brightness=bright, dover_min=0.07, lpips_min=0.05,
            unimatch=Interval(1.0, 100),
            aesthetic_min=5.3, text_area_pct_max=0.05, clip_sim_min=0.20,
        ),
    }


def stage_kind(stage: str) -> str:
    """Which record kind a stage trains on."""
    return "image" if stage == "t2i_pretrain" else "video"


@dataclass
class ArtifactDecision:
    action: str  # "keep" | "keep_with_crop" | "discard"
    crop: CropRect | None
    combined_pct: float


@dataclass
class FilterOutcome:
    """Result of one pipeline run: surviving records, drops, and the audit."""

    kept: list[str]
    dropped: list[tuple[str, str, str]]  # (id, failing step, metric_key)
    decisions: list[DecisionRecord]
    kept_records: list[Record]
    summary: dict


@dataclass
class _ItemResult:
    kept_records: list[Record] = field(default_factory=list)
    dropped: list[tuple[str, str, str]] = field(default_factory=list)
    decisions: list[DecisionRecord] = field(default_factory=list)
    segmented: bool = False
    clips_extracted: int = 0


class MediaStore:
    """Resolves records to frame packs and materializes clip media.

    Record paths are resolved against ``media_root`` first and then against
    ``workdir`` (where this store writes clip packs, under ``clips/``).
    Clip packs contain the clip's span sliced from the parent pack; the
    recorded path is workdir-relative so manifests do not depend on where
    the working directory lives.
    """

    def __init__(
        self,
        media_root: str | os.PathLike = ".",
        workdir: str | os.PathLike | None = None,
        parents: dict[str, MediaItem] | None = None,
    ):
        self.media_root = Path(media_root)
        self.workdir = Path(workdir) if workdir is not None else None
        self.parents = dict(parents or {})
        self._pack_cache: dict[str, FramePack] = {}

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if p.is_absolute():
            return p
        cand = self.media_root / p
        if cand.exists() or self.workdir is None:
            return cand
        alt = self.workdir / p
        return alt if alt.exists() else cand

    def _read(self, path: Path) -> FramePack:
        key = str(path)
        if key not in self._pack_cache:
            self._pack_cache[key] = read_framepack(path)
        return self._pack_cache[key]

    def pack_for(self, record: Record) -> FramePack:
        if isinstance(record, MediaItem):
            return self._read(self.resolve(record.path))
        if record.path is not None:
            return self._read(self.resolve(record.path))
        parent = self.parents.get(record.parent_id)
        if parent is None:
            raise PipelineError(
                f"clip {record.id!r} has no media path and its parent "
                f"{record.parent_id!r} is unknown",
                item_id=record.id,
            )
        ppack = self._read(self.resolve(parent.path))
        start, end = record.span
        arr = ppack.as_array()[start:end]
        return FramePack.from_array(arr, fps_num=ppack.fps_num, fps_den=ppack.fps_den)

    @staticmethod
    def _safe_name(record_id: str) -> str:
        return "".join(c if c.isalnum() or c in "._-" else "_" for c in record_id)

    def _write_workdir(self, rel: str, pack: FramePack) -> str:
        if self.workdir is None:
            raise PipelineError("a workdir is required to materialize clip media")
        dest = self.workdir / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        if not dest.exists():
            write_framepack(pack, dest)
        return rel

    def media_path_for(self, record: Record) -> str:
        """Absolute path of the record's full frame pack, materializing clips."""
        if isinstance(record, MediaItem):
            return str(self.resolve(record.path))
        if record.path is not None:
            return str(self.resolve(record.path))
        rel = f"clips/{self._safe_name(record.id)}.fpk"
        self._write_workdir(rel, self.pack_for(record))
        record.path = rel
        return str(self.workdir / rel)

    def mid_frame_path_for(self, record: Record) -> str:
        """Absolute path of a 1-frame pack holding the record's mid frame."""
        pack = self.pack_for(record)
        if pack.frame_count == 1:
            return self.media_path_for(record)
        mid = metrics_mod.mid_frame_index(pack.frame_count)
        mid_pack = FramePack.from_array(
            pack.as_array()[mid : mid + 1], fps_num=pack.fps_num, fps_den=pack.fps_den
        )
        rel = f"clips/{self._safe_name(record.id)}.mid.fpk"
        self._write_workdir(rel, mid_pack)
        return str(self.workdir / rel)

    def gray_mid_frame(self, record: Record) -> np.ndarray:
        from . import kernels

        pack = self.pack_for(record)
        mid = metrics_mod.mid_frame_index(pack.frame_count)
        frame = pack.frame(mid)
        if frame.ndim == 3:
            return kernels.rgb_to_gray(frame)
        return frame


def _decision(
    item_id: str,
    step: str,
    key: str,
    value: float | None,
    threshold: Interval,
    stage: str,
    skipped: bool = False,
) -> DecisionRecord:
    return DecisionRecord(
        id=f"{item_id}:{step}:{key}",
        item_id=item_id,
        step=step,
        metric_key=key,
        value=value,
        threshold=threshold,
        passed=threshold.contains(value),
        stage=stage,
        skipped=skipped,
    )


def _record_kind(record: Record) -> str:
    return record.kind


def prefilter(item: Record, thresholds: StageThresholds, stage: str | None = None) -> list[DecisionRecord]:
    """Duration, FPS and resolution checks; one decision per applicable check.

    Duration bounds are inclusive, FPS bounds exclusive, resolution requires
    width and height to each meet its stage minimum. Images skip the duration
    and FPS checks. Records whose kind does not match the stage fail a
    ``kind`` check.
    """
    stage = stage if stage is not None else thresholds.stage
    out = []
    kind = _record_kind(item)
    if kind != stage_kind(thresholds.stage):
        out.append(_decision(item.id, "prefilter", "kind", None, Interval(), stage))
        return out
    if kind == "video":
        if thresholds.duration_s is not None:
            out.append(
                _decision(
                    item.id, "prefilter", "duration_s", item.duration_s,
                    thresholds.duration_s, stage,
                )
            )
        if thresholds.fps is not None:
            out.append(_decision(item.id, "prefilter", "fps", item.fps, thresholds.fps, stage))
    out.append(
        _decision(
            item.id, "prefilter", "width", item.width, Interval(lo=thresholds.min_width), stage
        )
    )
    out.append(
        _decision(
            item.id, "prefilter", "height", item.height, Interval(lo=thresholds.min_height), stage
        )
    )
    return out


def artifact_gate(
    width: int,
    height: int,
    text_area_pct: float,
    watermark_area_pct: float,
    boxes: list[tuple[int, int, int, int]],
    thresholds: StageThresholds,
) -> ArtifactDecision:
    """Decide keep / keep-with-crop / discard from artifact coverage.

    The combined text+watermark area percentage is compared against the stage
    bound. Under the bound, if every detection box lies inside the outer
    10% margin band of the frame, the clip is kept with a crop to the largest
    interior rectangle excluding that band; otherwise it is kept as-is.
    Over the bound the clip is discarded.
    """
    combined = text_area_pct + watermark_area_pct
    if combined > thresholds.text_area_pct_max:
        return ArtifactDecision(action="discard", crop=None, combined_pct=combined)
    if not boxes:
        return ArtifactDecision(action="keep", crop=None, combined_pct=combined)
    mx = int(round(width * MARGIN_FRACTION))
    my = int(round(height * MARGIN_FRACTION))
    ix0, iy0 = mx, my
    ix1, iy1 = width - mx, height - my
    for (bx, by, bw, bh) in boxes:
        # A box is inside the band iff it does not intersect the interior.
        if bx < ix1 and bx + bw > ix0 and by < iy1 and by + bh > iy0:
            return ArtifactDecision(action="keep", crop=None, combined_pct=combined)
    crop = CropRect(x=ix0, y=iy0, width=ix1 - ix0, height=iy1 - iy0)
    return ArtifactDecision(action="keep_with_crop", crop=crop, combined_pct=combined)


class _PipelineContext:
    def __init__(
        self,
        thresholds: StageThresholds,
        scorer: ScorerClient | None,
        store: MediaStore,
        segmenter: SegmenterConfig,
        skip_on_scorer_error: bool,
        segment_videos: bool = True,
    ):
        self.thresholds = thresholds
        self.scorer = scorer
        self.store = store
        self.segmenter = segmenter
        self.skip_on_scorer_error = skip_on_scorer_error
        self.segment_videos = segment_videos

    def require_scorer(self) -> None:
        # Raised before any media materialization so a missing scorer
        # surfaces as a scorer-class failure, not a media one.
        if self.scorer is None:
            raise ScorerError("no scorer endpoint configured", code="config")

    def score(self, request: ScoreRequest):
        self.require_scorer()
        return self.scorer.score(request)


def _metric_checks(thresholds: StageThresholds) -> list[tuple[str, str, Interval, str]]:
    """Applicable metric checks in pipeline order.

    Returns (step, metric_key, threshold, scorer_task); a stage lists a check
    only when its column carries a bound for it.
    """
    checks = [("low_level_metrics", "brightness", thresholds.brightness, "")]
    if thresholds.dover_min is not None:
        checks.append(("low_level_metrics", "dover", Interval(lo=thresholds.dover_min), "dover"))
    if thresholds.lpips_min is not None:
        checks.append(("low_level_metrics", "lpips", Interval(lo=thresholds.lpips_min), "lpips_consistency"))
    if thresholds.unimatch is not None:
        checks.append(("low_level_metrics", "unimatch", thresholds.unimatch, "unimatch_motion"))
    checks.append(("aesthetics", "aesthetic", Interval(lo=thresholds.aesthetic_min), "aesthetic"))
    return checks


def run_metric_filters(
    record: Record, thresholds: StageThresholds, ctx: _PipelineContext
) -> tuple[list[DecisionRecord], str | None]:
    """Brightness through aesthetics, short-circuiting at the first failure.

    Returns (decisions, failing metric_key or None). Stored metric values are
    reused; missing ones are computed in-process (brightness) or requested
    from the scorer. Remaining checks after a failure are logged as skipped.
    """
    checks = _metric_checks(thresholds)
    decisions: list[DecisionRecord] = []
    stage = thresholds.stage
    failed_key: str | None = None
    for index, (step, key, bound, task) in enumerate(checks):
        value = getattr(record.metrics, key)
        if value is None:
            if key == "brightness":
                value = metrics_mod.brightness(ctx.store.gray_mid_frame(record))
            else:
                ctx.require_scorer()
                media_kind = "video" if task in ("dover", "lpips_consistency", "unimatch_motion") else "image"
                if media_kind == "video":
                    path = ctx.store.media_path_for(record)
                else:
                    path = ctx.store.mid_frame_path_for(record)
                value = ctx.score(
                    ScoreRequest(task=task, media=MediaRef(kind=media_kind, path=path))
                ).value
            setattr(record.metrics, key, value)
        decisions.append(_decision(record.id, step, key, value, bound, stage))
        if not decisions[-1].passed:
            failed_key = key
            for step2, key2, bound2, _ in checks[index + 1 :]:
                decisions.append(
                    _decision(record.id, step2, key2, None, bound2, stage, skipped=True)
                )
            break
    return decisions, failed_key


def run_artifact_gate(
    record: Record, thresholds: StageThresholds, ctx: _PipelineContext
) -> tuple[DecisionRecord, ArtifactDecision]:
    """Fetch artifact area ratios if missing and apply the gate.

    Detection boxes are not part of the scorer protocol, so in-pipeline runs
    only decide keep/discard; the crop branch is reachable through
    :func:`artifact_gate` when box geometry is known.
    """
    for key, task in (("text_area_pct", "text_area"), ("watermark_area_pct", "watermark_area")):
        if getattr(record.metrics, key) is None:
            ctx.require_scorer()
            path = ctx.store.mid_frame_path_for(record)
            value = ctx.score(
                ScoreRequest(task=task, media=MediaRef(kind="image", path=path))
            ).value
            setattr(record.metrics, key, value)
    verdict = artifact_gate(
        record.width,
        record.height,
        record.metrics.text_area_pct,
        record.metrics.watermark_area_pct,
        [],
        thresholds,
    )
    decision = _decision(
        record.id,
        "artifacts",
        "artifact_area_pct",
        verdict.combined_pct,
        Interval(hi=thresholds.text_area_pct_max),
        thresholds.stage,
    )
    return decision, verdict


def run_caption_and_sim(
    record: Record, thresholds: StageThresholds, ctx: _PipelineContext
) -> tuple[CaptionSet | None, DecisionRecord]:
    """Coarse captioning, the similarity gate, then fine captioning on pass.

    The coarse caption text is embedded alongside the record's mid frame and
    gated on cosine similarity (inclusive bound). On pass, fine captions are
    requested with an instruction that embeds the coarse caption as context.
    Stored captions and a stored ``clip_sim`` are reused instead of being
    re-requested.
    """
    kind = _record_kind(record)
    captions = record.captions if record.captions is not None else CaptionSet()
    mid_path: str | None = None

    def mid() -> str:
        nonlocal mid_path
        if mid_path is None:
            mid_path = ctx.store.mid_frame_path_for(record)
        return mid_path

    if captions.coarse is None:
        # Coarse captioning works on the intermediate frame for images and
        # videos alike; for videos it doubles as the mid-frame coarse slot.
        ctx.require_scorer()
        resp = ctx.score(
            ScoreRequest(task="caption_coarse", media=MediaRef(kind="image", path=mid()))
        )
        captions.coarse = CoarseCaption(tags=resp.tags or [], text=resp.text or "")
        if kind == "video" and captions.mid_frame_coarse is None:
            captions.mid_frame_coarse = CoarseCaption(
                tags=list(captions.coarse.tags), text=captions.coarse.text
            )
    elif kind == "video" and captions.mid_frame_coarse is None:
        captions.mid_frame_coarse = CoarseCaption(
            tags=list(captions.coarse.tags), text=captions.coarse.text
        )

    sim = record.metrics.clip_sim
    if sim is None:
        ctx.require_scorer()
        text_emb = ctx.score(
            ScoreRequest(task="embed_text", text=captions.coarse.text)
        ).embedding
        image_emb = ctx.score(
            ScoreRequest(task="embed_image", media=MediaRef(kind="image", path=mid()))
        ).embedding
        sim = metrics_mod.cosine_similarity(text_emb, image_emb)
        record.metrics.clip_sim = sim
    decision = _decision(
        record.id,
        "clip_similarity",
        "clip_sim",
        sim,
        Interval(lo=thresholds.clip_sim_min),
        thresholds.stage,
    )
    if not decision.passed:
        return None, decision

    if captions.fine is None:
        ctx.require_scorer()
        instruction = build_fine_instruction(captions.coarse, kind)
        media_kind = "video" if kind == "video" else "image"
        media_path = ctx.store.media_path_for(record) if kind == "video" else mid()
        captions.fine = ctx.score(
            ScoreRequest(
                task="caption_fine",
                media=MediaRef(kind=media_kind, path=media_path),
                text=instruction,
            )
        ).text
    if kind == "video" and captions.mid_frame_fine is None:
        ctx.require_scorer()
        instruction = build_fine_instruction(captions.mid_frame_coarse, "image")
        captions.mid_frame_fine = ctx.score(
            ScoreRequest(task="caption_fine", media=MediaRef(kind="image", path=mid()), text=instruction)
        ).text

    assembled = assemble_caption_set(
        kind,
        captions.coarse,
        captions.fine,
        mid_coarse=captions.mid_frame_coarse,
        mid_fine=captions.mid_frame_fine,
    )
    assembled.extra = captions.extra
    return assembled, decision


def _evaluate_terminal(record: Record, ctx: _PipelineContext) -> _ItemResult:
    """Run one image or clip through every gate."""
    result = _ItemResult()
    thresholds = ctx.thresholds
    record = copy.deepcopy(record)

    pre = prefilter(record, thresholds)
    result.decisions.extend(pre)
    failing = next((d for d in pre if not d.passed), None)
    if failing is not None:
        result.dropped.append((record.id, "prefilter", failing.metric_key))
        return result

    try:
        decisions, failed_key = run_metric_filters(record, thresholds, ctx)
        result.decisions.extend(decisions)
        if failed_key is not None:
            step = next(d.step for d in decisions if d.metric_key == failed_key)
            result.dropped.append((record.id, step, failed_key))
            return result

        art_decision, verdict = run_artifact_gate(record, thresholds, ctx)
        result.decisions.append(art_decision)
        if verdict.action == "discard":
            result.dropped.append((record.id, "artifacts", "artifact_area_pct"))
            return result
        if verdict.action == "keep_with_crop" and isinstance(record, ClipRecord):
            record.crop = verdict.crop
            record.width = verdict.crop.width
            record.height = verdict.crop.height

        captions, sim_decision = run_caption_and_sim(record, thresholds, ctx)
        result.decisions.append(sim_decision)
        if captions is None:
            result.dropped.append((record.id, "clip_similarity", "clip_sim"))
            return result
        record.captions = captions
    except ScorerError as exc:
        if not ctx.skip_on_scorer_error:
            raise PipelineError(
                f"scorer failed for item {record.id!r}: {exc}", item_id=record.id
            ) from exc
        logger.warning("dropping %s after scorer error: %s", record.id, exc)
        result.decisions.append(
            _decision(record.id, "scorer_error", exc.code, None, Interval(), thresholds.stage)
        )
        result.dropped.append((record.id, "scorer_error", exc.code))
        return result

    decision_ids = [d.id for d in result.decisions]
    if isinstance(record, ClipRecord):
        record.decisions = decision_ids
    result.kept_records.append(record)
    return result


def _process_item(record: Record, ctx: _PipelineContext) -> _ItemResult:
    # Raw videos are segmented first; their clips become the terminal records.
    if (
        ctx.segment_videos
        and isinstance(record, MediaItem)
        and record.kind == "video"
        and stage_kind(ctx.thresholds.stage) == "video"
    ):
        result = _ItemResult()
        pre = prefilter(record, ctx.thresholds)
        result.decisions.extend(pre)
        failing = next((d for d in pre if not d.passed), None)
        if failing is not None:
            result.dropped.append((record.id, "prefilter", failing.metric_key))
            return result
        pack = ctx.store.pack_for(record)
        _, clips = segment_pack(record, pack, ctx.segmenter)
        result.segmented = True
        result.clips_extracted = len(clips)
        ctx.store.parents.setdefault(record.id, record)
        for clip in clips:
            sub = _evaluate_terminal(clip, ctx)
            result.kept_records.extend(sub.kept_records)
            result.dropped.extend(sub.dropped)
            result.decisions.extend(sub.decisions)
        return result
    return _evaluate_terminal(record, ctx)


def run_pipeline(
    records: list[Record],
    stage: str,
    thresholds: StageThresholds,
    scorer: ScorerClient | None = None,
    store: MediaStore | None = None,
    segmenter: SegmenterConfig | None = None,
    workers: int = 1,
    skip_on_scorer_error: bool = False,
    segment_videos: bool = True,
) -> FilterOutcome:
    """Filter a manifest for one training stage.

    Returns the outcome with kept records, drops and decisions all sorted by
    id (decision order within an item follows the step order). A scorer
    failure aborts the run unless ``skip_on_scorer_error`` is set, in which
    case the item is dropped under the ``scorer_error`` step.

    ``segment_videos=False`` evaluates raw video items as terminal records
    (no media access) instead of cutting them into clips, which is how
    pre-scored whole-video manifests are re-checked.
    """
    if stage not in STAGE_NAMES:
        raise ValidationError(f"unknown stage {stage!r}")
    if thresholds.stage != stage:
        raise ValidationError(f"thresholds are for {thresholds.stage!r}, not {stage!r}")
    problems = thresholds.validate()
    if problems:
        raise ValidationError(f"invalid thresholds: {'; '.join(problems)}")
    ctx = _PipelineContext(
        thresholds=thresholds,
        scorer=scorer,
        store=store if store is not None else MediaStore(),
        segmenter=segmenter if segmenter is not None else SegmenterConfig(),
        skip_on_scorer_error=skip_on_scorer_error,
        segment_videos=segment_videos,
    )
    for rec in records:
        if isinstance(rec, MediaItem):
            ctx.store.parents.setdefault(rec.id, rec)

    if workers < 1:
        raise ValidationError("workers must be >= 1")
    if workers == 1 or len(records) <= 1:
        results = [_process_item(rec, ctx) for rec in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _process_item(r, ctx), records))

    kept_records: list[Record] = []
    dropped: list[tuple[str, str, str]] = []
    by_item: dict[str, list[DecisionRecord]] = {}
    segmented = 0
    clips_extracted = 0
    for res in results:
        kept_records.extend(res.kept_records)
        dropped.extend(res.dropped)
        segmented += int(res.segmented)
        clips_extracted += res.clips_extracted
        for dec in res.decisions:
            by_item.setdefault(dec.item_id, []).append(dec)

    kept_records.sort(key=lambda r: r.id)
    dropped.sort(key=lambda d: d[0])
    decisions = [dec for item_id in sorted(by_item) for dec in by_item[item_id]]

    dropped_by_step: dict[str, int] = {}
    for _, step, _ in dropped:
        dropped_by_step[step] = dropped_by_step.get(step, 0) + 1
    summary = {
        "stage": stage,
        "input_records": len(records),
        "segmented_videos": segmented,
        "clips_extracted": clips_extracted,
        "kept": len(kept_records),
        "dropped": len(dropped),
        "dropped_by_step": dict(sorted(dropped_by_step.items())),
        "decisions": len(decisions),
    }
    return FilterOutcome(
        kept=[r.id for r in kept_records],
        dropped=dropped,
        decisions=decisions,
        kept_records=kept_records,
        summary=summary,
    )


def write_outcome(
    outcome: FilterOutcome,
    kept_path: str | os.PathLike,
    dropped_path: str | os.PathLike | None = None,
    decisions_path: str | os.PathLike | None = None,
    summary_path: str | os.PathLike | None = None,
) -> None:
    """Write kept.jsonl plus the optional dropped/decision/summary files."""
    import json

    write_manifest(outcome.kept_records, kept_path)
    if dropped_path is not None:
        with open(dropped_path, "w", encoding="utf-8", newline="\n") as fh:
            for item_id, step, key in outcome.dropped:
                fh.write(
                    json.dumps(
                        {"id": item_id, "step": step, "metric_key": key},
                        sort_keys=True,
                        separators=(",", ":"),
                    )
                )
                fh.write("\n")
    if decisions_path is not None:
        write_decisions(outcome.decisions, decisions_path)
    if summary_path is not None:
        with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(outcome.summary, sort_keys=True, indent=2))
            fh.write("\n")
