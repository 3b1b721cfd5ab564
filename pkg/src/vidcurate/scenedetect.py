"""Content-based shot segmentation and clip extraction.

The detector scores each adjacent frame pair by the mean per-pixel absolute
difference across the H, S and V channels (each scaled to [0, 255]) and cuts
where the score exceeds a threshold, suppressing cuts closer than
``min_scene_len`` frames to the previous one. The defaults (threshold 27,
minimum scene length 15) mirror the documented defaults of the standard
content detector so results are reproducible.

Extracted scenes are trimmed by ``trim_frames`` at both ends and kept only
when the trimmed duration falls inside ``keep_duration_s`` (closed bounds).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .ingest import PIXEL_RGB8, FramePack
from .manifest import ClipRecord, MediaItem, Violation

CLIP_FPS = 30.0  # clips are re-encoded at a fixed 30 FPS downstream


@dataclass
class SegmenterConfig:
    cut_threshold: float = 27.0
    min_scene_len: int = 15
    trim_frames: int = 10
    keep_duration_s: tuple[float, float] = (2.0, 16.0)

    def validate(self) -> list[Violation]:
        out = []
        if self.cut_threshold <= 0:
            out.append(Violation("cut_threshold", "must be > 0"))
        if self.min_scene_len < 1:
            out.append(Violation("min_scene_len", "must be >= 1"))
        if self.trim_frames < 0:
            out.append(Violation("trim_frames", "must be >= 0"))
        if self.keep_duration_s[0] > self.keep_duration_s[1]:
            out.append(Violation("keep_duration_s", "lower bound above upper bound"))
        return out


def content_curve(pack: FramePack) -> np.ndarray:
    """Change score for each adjacent frame pair; length frame_count - 1."""
    if pack.frame_count < 2:
        raise ValidationError("content_curve requires at least 2 frames")
    if pack.pixel_format != PIXEL_RGB8:
        raise ValidationError("content_curve requires RGB8 frames")
    return kernels.hsv_diff_curve(pack.as_array())


def detect_cuts(curve: np.ndarray, config: SegmenterConfig) -> list[int]:
    """Frame indices where a new scene starts (excluding 0), strictly increasing.

    A value above the threshold at curve index i proposes a cut at frame i+1.
    The first proposal always cuts; later proposals are suppressed until
    ``min_scene_len`` frames have passed since the previous cut.
    """
    cuts: list[int] = []
    last_cut: int | None = None
    for i, value in enumerate(curve):
        if value > config.cut_threshold:
            frame = i + 1
            if last_cut is None or frame - last_cut >= config.min_scene_len:
                cuts.append(frame)
                last_cut = frame
    return cuts


def extract_clips(
    parent: MediaItem, cuts: list[int], config: SegmenterConfig
) -> list[ClipRecord]:
    """Turn cut points into trimmed, duration-gated ClipRecords.

    Scenes are the consecutive spans between {0, cuts..., frame_count}; each
    is trimmed by ``trim_frames`` at both ends, and survivors must land inside
    ``keep_duration_s`` (closed). Clip ids are ``{parent.id}__c{scene_index}``
    so they stay stable when thresholds change.
    """
    if parent.kind != "video" or parent.fps is None or parent.frame_count is None:
        raise ValidationError(f"cannot extract clips from non-video item {parent.id!r}")
    frame_count = parent.frame_count
    for i, c in enumerate(cuts):
        prev = cuts[i - 1] if i else 0
        if not (prev < c < frame_count):
            raise ValidationError(f"cut list invalid at index {i}: {cuts}")

    bounds = [0, *cuts, frame_count]
    lo, hi = config.keep_duration_s
    clips: list[ClipRecord] = []
    for scene_index, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        start = a + config.trim_frames
        end = b - config.trim_frames
        if end <= start:
            continue
        duration = (end - start) / parent.fps
        if not (lo <= duration <= hi):
            continue
        clips.append(
            ClipRecord(
                id=f"{parent.id}__c{scene_index:03d}",
                parent_id=parent.id,
                span=(start, end),
                fps=CLIP_FPS,
                source_fps=parent.fps,
                duration_s=duration,
                width=parent.width,
                height=parent.height,
            )
        )
    return clips


def segment_pack(
    parent: MediaItem, pack: FramePack, config: SegmenterConfig
) -> tuple[list[int], list[ClipRecord]]:
    """Run the full segmentation of one video: curve, cuts, clips.

    ``pack`` must be the frames the manifest entry describes; a frame-count
    mismatch means the manifest and the asset have drifted apart.
    """
    if pack.frame_count != parent.frame_count:
        raise ValidationError(
            f"{parent.id!r}: manifest says {parent.frame_count} frames "
            f"but {parent.path} holds {pack.frame_count}"
        )
    if pack.frame_count < 2:
        return [], extract_clips(parent, [], config)
    curve = content_curve(pack)
    cuts = detect_cuts(curve, config)
    return cuts, extract_clips(parent, cuts, config)
