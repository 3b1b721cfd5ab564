"""Canonical data model and JSONL persistence for media items, clips, and decisions.

A manifest is a UTF-8 JSONL file with one record per line. Field names are
snake_case, exactly as defined by the dataclasses below. Unknown JSON fields
are preserved opaquely in ``extra`` so third-party annotations survive a
round trip through the pipeline. Numeric fields are serialized with up to 9
significant digits; consumers must compare with tolerances, not strings.

The decision log is a separate JSONL file of :class:`DecisionRecord`.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields
from typing import Any, Iterable

from .errors import ManifestError, ValidationError

# Filter steps that may appear in a DecisionRecord, in pipeline order,
# plus the stratification pass and the scorer-failure pseudo-step.
FILTER_STEPS = (
    "prefilter",
    "scene_segmentation",
    "low_level_metrics",
    "aesthetics",
    "artifacts",
    "coarse_caption",
    "clip_similarity",
    "stratification",
    "scorer_error",
)

KINDS = ("image", "video")


def _round9(x: float) -> float:
    """Limit a float to 9 significant digits for stable serialization."""
    if x != x or x in (float("inf"), float("-inf")):
        return x
    return float(f"{x:.9g}")


@dataclass(frozen=True)
class Violation:
    """One invariant violation: which field broke which rule."""

    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


@dataclass(frozen=True)
class Interval:
    """A numeric bound usable as a filter threshold.

    Either side may be absent (unbounded). ``lo_open``/``hi_open`` select
    exclusive comparison for that side; defaults are inclusive (closed).
    """

    lo: float | None = None
    hi: float | None = None
    lo_open: bool = False
    hi_open: bool = False

    def contains(self, value: float | None) -> bool:
        if value is None:
            return False
        if self.lo is not None and (value < self.lo or (self.lo_open and value == self.lo)):
            return False
        if self.hi is not None and (value > self.hi or (self.hi_open and value == self.hi)):
            return False
        return True

    def to_json(self) -> dict:
        d: dict[str, Any] = {}
        if self.lo is not None:
            d["min"] = _round9(self.lo)
            if self.lo_open:
                d["min_open"] = True
        if self.hi is not None:
            d["max"] = _round9(self.hi)
            if self.hi_open:
                d["max_open"] = True
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Interval":
        return cls(
            lo=d.get("min"),
            hi=d.get("max"),
            lo_open=bool(d.get("min_open", False)),
            hi_open=bool(d.get("max_open", False)),
        )

    def is_empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and (self.lo_open or self.hi_open)


@dataclass
class MetricVector:
    """Per-record metric values; every field is absent until scored."""

    brightness: float | None = None
    dover: float | None = None
    lpips: float | None = None
    unimatch: float | None = None
    aesthetic: float | None = None
    text_area_pct: float | None = None
    watermark_area_pct: float | None = None
    clip_sim: float | None = None
    motion_proxy: float | None = None
    consistency_proxy: float | None = None
    extra: dict = field(default_factory=dict)

    # Declared ranges; fields not listed only need to be finite.
    RANGES = {
        "brightness": (0.0, 255.0),
        "text_area_pct": (0.0, 100.0),
        "watermark_area_pct": (0.0, 100.0),
        "clip_sim": (-1.0, 1.0),
        "motion_proxy": (0.0, None),
        "consistency_proxy": (0.0, 1.0),
    }

    def validate(self) -> list[Violation]:
        out = []
        for f in fields(self):
            if f.name == "extra":
                continue
            v = getattr(self, f.name)
            if v is None:
                continue
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                out.append(Violation(f"metrics.{f.name}", "must be a finite number"))
                continue
            lo, hi = self.RANGES.get(f.name, (None, None))
            if lo is not None and v < lo or hi is not None and v > hi:
                rng = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
                out.append(Violation(f"metrics.{f.name}", f"value {v} outside {rng}"))
        return out

    def to_json(self) -> dict:
        d = {}
        for f in fields(self):
            if f.name == "extra":
                continue
            v = getattr(self, f.name)
            if v is not None:
                d[f.name] = _round9(float(v))
        d.update(self.extra)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MetricVector":
        known = {f.name for f in fields(cls)} - {"extra"}
        kwargs = {k: v for k, v in d.items() if k in known}
        extra = {k: v for k, v in d.items() if k not in known}
        return cls(**kwargs, extra=extra)

    def is_empty(self) -> bool:
        return not self.extra and all(
            getattr(self, f.name) is None for f in fields(self) if f.name != "extra"
        )


@dataclass
class CoarseCaption:
    tags: list[str] = field(default_factory=list)
    text: str = ""

    def to_json(self) -> dict:
        return {"tags": list(self.tags), "text": self.text}

    @classmethod
    def from_json(cls, d: dict) -> "CoarseCaption":
        return cls(tags=list(d.get("tags", [])), text=d.get("text", ""))


@dataclass
class CaptionSet:
    """Caption slots for one record.

    Videos may carry all four slots; images carry only ``coarse`` and
    ``fine``. ``camera_motions`` holds the motion patterns extracted from
    the record-level fine caption.
    """

    coarse: CoarseCaption | None = None
    fine: str | None = None
    mid_frame_coarse: CoarseCaption | None = None
    mid_frame_fine: str | None = None
    camera_motions: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def validate(self, kind: str) -> list[Violation]:
        out = []
        if kind == "image":
            if self.mid_frame_coarse is not None:
                out.append(Violation("captions.mid_frame_coarse", "images carry only coarse and fine captions"))
            if self.mid_frame_fine is not None:
                out.append(Violation("captions.mid_frame_fine", "images carry only coarse and fine captions"))
        return out

    def to_json(self) -> dict:
        d: dict[str, Any] = {}
        if self.coarse is not None:
            d["coarse"] = self.coarse.to_json()
        if self.fine is not None:
            d["fine"] = self.fine
        if self.mid_frame_coarse is not None:
            d["mid_frame_coarse"] = self.mid_frame_coarse.to_json()
        if self.mid_frame_fine is not None:
            d["mid_frame_fine"] = self.mid_frame_fine
        if self.camera_motions:
            d["camera_motions"] = list(self.camera_motions)
        d.update(self.extra)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CaptionSet":
        known = {"coarse", "fine", "mid_frame_coarse", "mid_frame_fine", "camera_motions"}
        return cls(
            coarse=CoarseCaption.from_json(d["coarse"]) if "coarse" in d else None,
            fine=d.get("fine"),
            mid_frame_coarse=CoarseCaption.from_json(d["mid_frame_coarse"])
            if "mid_frame_coarse" in d
            else None,
            mid_frame_fine=d.get("mid_frame_fine"),
            camera_motions=list(d.get("camera_motions", [])),
            extra={k: v for k, v in d.items() if k not in known},
        )


@dataclass
class CropRect:
    """Axis-aligned rectangle in parent pixel coordinates."""

    x: int
    y: int
    width: int
    height: int

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "width": self.width, "height": self.height}

    @classmethod
    def from_json(cls, d: dict) -> "CropRect":
        return cls(x=d["x"], y=d["y"], width=d["width"], height=d["height"])


@dataclass
class MediaItem:
    """A source asset: one image or one raw video.

    ``width``/``height``/``fps``/``frame_count``/``duration_s`` describe the
    source as ingested; ``path`` points at its frame container on shared
    storage. ``fps``, ``frame_count`` and ``duration_s`` apply to videos only.
    """

    id: str
    kind: str
    path: str
    width: int
    height: int
    fps: float | None = None
    frame_count: int | None = None
    duration_s: float | None = None
    source: str = ""
    metrics: MetricVector = field(default_factory=MetricVector)
    captions: CaptionSet | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> list[Violation]:
        out = []
        if not self.id:
            out.append(Violation("id", "must be non-empty"))
        if self.kind not in KINDS:
            out.append(Violation("kind", f"must be one of {KINDS}"))
        if self.width < 1:
            out.append(Violation("width", "must be >= 1"))
        if self.height < 1:
            out.append(Violation("height", "must be >= 1"))
        if self.kind == "video":
            if self.fps is None or self.fps <= 0:
                out.append(Violation("fps", "videos require fps > 0"))
            if self.frame_count is None or self.frame_count < 1:
                out.append(Violation("frame_count", "videos require frame_count >= 1"))
            if self.duration_s is None:
                out.append(Violation("duration_s", "videos require duration_s"))
            elif self.fps and self.frame_count:
                expect = self.frame_count / self.fps
                if abs(self.duration_s - expect) > 1e-6 * expect:
                    out.append(
                        Violation(
                            "duration_s",
                            f"must equal frame_count/fps = {expect:.9g} within 1e-6 relative",
                        )
                    )
        else:
            for name in ("fps", "frame_count", "duration_s"):
                if getattr(self, name) is not None:
                    out.append(Violation(name, "video-only field present on an image"))
        out.extend(self.metrics.validate())
        if self.captions is not None:
            out.extend(self.captions.validate(self.kind))
        return out

    def to_json(self) -> dict:
        d: dict[str, Any] = {
            "id": self.id,
            "kind": self.kind,
            "path": self.path,
            "width": self.width,
            "height": self.height,
        }
        if self.fps is not None:
            d["fps"] = _round9(float(self.fps))
        if self.frame_count is not None:
            d["frame_count"] = self.frame_count
        if self.duration_s is not None:
            d["duration_s"] = _round9(float(self.duration_s))
        if self.source:
            d["source"] = self.source
        if not self.metrics.is_empty():
            d["metrics"] = self.metrics.to_json()
        if self.captions is not None:
            d["captions"] = self.captions.to_json()
        d.update(self.extra)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MediaItem":
        known = {
            "id", "kind", "path", "width", "height", "fps", "frame_count",
            "duration_s", "source", "metrics", "captions",
        }
        return cls(
            id=d["id"],
            kind=d["kind"],
            path=d["path"],
            width=d["width"],
            height=d["height"],
            fps=d.get("fps"),
            frame_count=d.get("frame_count"),
            duration_s=d.get("duration_s"),
            source=d.get("source", ""),
            metrics=MetricVector.from_json(d.get("metrics", {})),
            captions=CaptionSet.from_json(d["captions"]) if "captions" in d else None,
            extra={k: v for k, v in d.items() if k not in known},
        )


@dataclass
class ClipRecord:
    """A single-scene clip cut from a parent video.

    ``span`` is [start_frame, end_frame) in parent frame indices.
    ``source_fps`` is the parent's frame rate, kept so ``duration_s`` is
    recomputable from the record alone; ``fps`` is the rate after re-encode
    (fixed at 30). ``width``/``height`` are the dimensions after any crop,
    and ``path``, when set, points at the clip's materialized frame container.
    """

    id: str
    parent_id: str
    span: tuple[int, int]
    fps: float
    source_fps: float
    duration_s: float
    width: int
    height: int
    path: str | None = None
    crop: CropRect | None = None
    metrics: MetricVector = field(default_factory=MetricVector)
    captions: CaptionSet | None = None
    decisions: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    kind = "video"  # clips are always video records

    def validate(self) -> list[Violation]:
        out = []
        if not self.id:
            out.append(Violation("id", "must be non-empty"))
        if not self.parent_id:
            out.append(Violation("parent_id", "must be non-empty"))
        start, end = self.span
        if not start < end:
            out.append(Violation("span", f"start_frame {start} must be < end_frame {end}"))
        if self.fps <= 0:
            out.append(Violation("fps", "must be > 0"))
        if self.source_fps <= 0:
            out.append(Violation("source_fps", "must be > 0"))
        elif start < end:
            expect = (end - start) / self.source_fps
            if abs(self.duration_s - expect) > 1e-6 * expect:
                out.append(
                    Violation(
                        "duration_s",
                        f"must equal (end_frame - start_frame)/source_fps = {expect:.9g} "
                        "within 1e-6 relative",
                    )
                )
        if self.width < 1:
            out.append(Violation("width", "must be >= 1"))
        if self.height < 1:
            out.append(Violation("height", "must be >= 1"))
        if self.crop is not None:
            if self.crop.x < 0 or self.crop.y < 0:
                out.append(Violation("crop", "origin must be non-negative"))
            if self.crop.width < 1 or self.crop.height < 1:
                out.append(Violation("crop", "must be at least 1x1"))
            if (self.crop.width, self.crop.height) != (self.width, self.height):
                out.append(Violation("crop", "clip width/height must match the crop rectangle"))
        out.extend(self.metrics.validate())
        if self.captions is not None:
            out.extend(self.captions.validate("video"))
        return out

    def validate_against_parent(self, parent: MediaItem) -> list[Violation]:
        """Cross-record checks that need the parent item."""
        out = []
        if self.crop is not None:
            if self.crop.x + self.crop.width > parent.width or self.crop.y + self.crop.height > parent.height:
                out.append(Violation("crop", "rectangle extends outside the parent frame"))
        if parent.frame_count is not None and self.span[1] > parent.frame_count:
            out.append(Violation("span", "end_frame beyond parent frame_count"))
        return out

    def to_json(self) -> dict:
        d: dict[str, Any] = {
            "id": self.id,
            "parent_id": self.parent_id,
            "span": [self.span[0], self.span[1]],
            "fps": _round9(float(self.fps)),
            "source_fps": _round9(float(self.source_fps)),
            "duration_s": _round9(float(self.duration_s)),
            "width": self.width,
            "height": self.height,
        }
        if self.path is not None:
            d["path"] = self.path
        if self.crop is not None:
            d["crop"] = self.crop.to_json()
        if not self.metrics.is_empty():
            d["metrics"] = self.metrics.to_json()
        if self.captions is not None:
            d["captions"] = self.captions.to_json()
        if self.decisions:
            d["decisions"] = list(self.decisions)
        d.update(self.extra)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ClipRecord":
        known = {
            "id", "parent_id", "span", "fps", "source_fps", "duration_s",
            "width", "height", "path", "crop", "metrics", "captions", "decisions",
        }
        return cls(
            id=d["id"],
            parent_id=d["parent_id"],
            span=(d["span"][0], d["span"][1]),
            fps=d["fps"],
            source_fps=d["source_fps"],
            duration_s=d["duration_s"],
            width=d["width"],
            height=d["height"],
            path=d.get("path"),
            crop=CropRect.from_json(d["crop"]) if "crop" in d else None,
            metrics=MetricVector.from_json(d.get("metrics", {})),
            captions=CaptionSet.from_json(d["captions"]) if "captions" in d else None,
            decisions=list(d.get("decisions", [])),
            extra={k: v for k, v in d.items() if k not in known},
        )


Record = MediaItem | ClipRecord


@dataclass
class DecisionRecord:
    """Audit entry for one filter check on one item.

    ``passed`` is recomputable from the record alone: it holds exactly when
    ``threshold.contains(value)``. Checks that were never evaluated because an
    earlier check failed carry ``value=None``, ``passed=False``, ``skipped=True``.
    """

    id: str
    item_id: str
    step: str
    metric_key: str
    value: float | None
    threshold: Interval
    passed: bool
    stage: str
    skipped: bool = False

    def validate(self) -> list[Violation]:
        out = []
        if self.step not in FILTER_STEPS:
            out.append(Violation("step", f"must be one of {FILTER_STEPS}"))
        if self.passed != self.threshold.contains(self.value):
            out.append(Violation("passed", "inconsistent with value and threshold"))
        return out

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "item_id": self.item_id,
            "step": self.step,
            "metric_key": self.metric_key,
            "value": None if self.value is None else _round9(float(self.value)),
            "threshold": self.threshold.to_json(),
            "passed": self.passed,
            "stage": self.stage,
            "skipped": self.skipped,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DecisionRecord":
        return cls(
            id=d["id"],
            item_id=d["item_id"],
            step=d["step"],
            metric_key=d["metric_key"],
            value=d.get("value"),
            threshold=Interval.from_json(d.get("threshold", {})),
            passed=d["passed"],
            stage=d.get("stage", "prefilter"),
            skipped=bool(d.get("skipped", False)),
        )


def record_to_json(record: Record) -> dict:
    return record.to_json()


def record_from_json(d: dict) -> Record:
    # Clips are distinguished structurally by their parent linkage.
    if "parent_id" in d:
        return ClipRecord.from_json(d)
    return MediaItem.from_json(d)


def validate_record(record: Record) -> list[Violation]:
    """Return every invariant violation of a record; empty iff valid."""
    return record.validate()


def dumps_record(record: Record) -> str:
    return json.dumps(record_to_json(record), sort_keys=True, separators=(",", ":"))


def write_manifest(records: Iterable[Record], path: str | os.PathLike) -> int:
    """Write records as JSONL in input order; returns the number written.

    Raises :class:`ValidationError` naming the offending record and invariant
    if any record is invalid (nothing is written in that case).
    """
    records = list(records)
    for rec in records:
        violations = validate_record(rec)
        if violations:
            raise ValidationError(
                f"record {rec.id!r} is invalid: " + "; ".join(str(v) for v in violations)
            )
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in records:
                fh.write(dumps_record(rec))
                fh.write("\n")
    except OSError as exc:
        raise ManifestError(f"cannot write manifest {path}: {exc}") from exc
    return len(records)


def load_manifest(path: str | os.PathLike) -> list[Record]:
    """Load a JSONL manifest, preserving record order and unknown fields."""
    records: list[Record] = []
    seen: dict[str, int] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ManifestError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
                try:
                    rec = record_from_json(d)
                except (KeyError, TypeError) as exc:
                    raise ManifestError(f"{path}: bad record on line {lineno}: {exc}") from exc
                if rec.id in seen:
                    raise ManifestError(
                        f"{path}: duplicate id {rec.id!r} on lines {seen[rec.id]} and {lineno}"
                    )
                seen[rec.id] = lineno
                records.append(rec)
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    return records


def write_decisions(decisions: Iterable[DecisionRecord], path: str | os.PathLike) -> int:
    """Write the decision log (separate JSONL file of DecisionRecord)."""
    n = 0
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for dec in decisions:
                fh.write(json.dumps(dec.to_json(), sort_keys=True, separators=(",", ":")))
                fh.write("\n")
                n += 1
    except OSError as exc:
        raise ManifestError(f"cannot write decision log {path}: {exc}") from exc
    return n


def load_decisions(path: str | os.PathLike) -> list[DecisionRecord]:
    out = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    out.append(DecisionRecord.from_json(json.loads(line)))
                except (json.JSONDecodeError, KeyError) as exc:
                    raise ManifestError(f"{path}: bad decision on line {lineno}: {exc}") from exc
    except OSError as exc:
        raise ManifestError(f"cannot read decision log {path}: {exc}") from exc
    return out
