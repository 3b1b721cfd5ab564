"""Shared test fixtures: synthetic media, scored corpora, and the
independent brute-force threshold oracle used to check the pipeline."""

from __future__ import annotations

import random

import numpy as np

from vidcurate.ingest import FramePack, write_framepack
from vidcurate.manifest import CaptionSet, ClipRecord, CoarseCaption, MediaItem, MetricVector

# ---------------------------------------------------------------------------
# Independent oracle: the published table's four columns, written as plain
# comparisons over plain dicts. Deliberately shares no code with the package.
# ---------------------------------------------------------------------------

ORACLE_COLUMNS = {
    "t2i_pretrain": {
        "kind": "image", "dur": None, "fps": False, "min_w": 640, "min_h": 368,
        "dover": None, "lpips": None, "uni": None, "aes": 4.8, "text": 0.05, "clip": 0.17,
    },
    "t2v_pretrain_360p": {
        "kind": "video", "dur": (2.0, 16.0), "fps": True, "min_w": 640, "min_h": 368,
        "dover": None, "lpips": None, "uni": None, "aes": 4.8, "text": 0.05, "clip": 0.17,
    },
    "t2v_pretrain_720p": {
        "kind": "video", "dur": (2.0, 16.0), "fps": True, "min_w": 1280, "min_h": 720,
        "dover": None, "lpips": None, "uni": None, "aes": 5.0, "text": 0.05, "clip": 0.20,
    },
    "t2v_finetune": {
        "kind": "video", "dur": (6.0, 16.0), "fps": True, "min_w": 1280, "min_h": 720,
        "dover": 0.07, "lpips": 0.05, "uni": (1.0, 100.0), "aes": 5.3, "text": 0.05, "clip": 0.20,
    },
}


def oracle_stage_ok(sample: dict, stage: str) -> bool:
    """Does a plain sample dict satisfy one stage column? Brute force."""
    col = ORACLE_COLUMNS[stage]
    if sample["kind"] != col["kind"]:
        return False
    if col["dur"] is not None:
        if sample.get("duration") is None:
            return False
        if not (col["dur"][0] <= sample["duration"] <= col["dur"][1]):
            return False
    if col["fps"]:
        if sample.get("fps") is None:
            return False
        if not (23 < sample["fps"] < 61):
            return False
    if sample["width"] < col["min_w"] or sample["height"] < col["min_h"]:
        return False
    if sample.get("brightness") is None or not (20 <= sample["brightness"] <= 180):
        return False
    if col["dover"] is not None:
        if sample.get("dover") is None or sample["dover"] < col["dover"]:
            return False
    if col["lpips"] is not None:
        if sample.get("lpips") is None or sample["lpips"] < col["lpips"]:
            return False
    if col["uni"] is not None:
        if sample.get("unimatch") is None:
            return False
        if not (col["uni"][0] <= sample["unimatch"] <= col["uni"][1]):
            return False
    if sample.get("aesthetic") is None or sample["aesthetic"] < col["aes"]:
        return False
    if sample.get("text_area") is None or sample.get("watermark_area") is None:
        return False
    if sample["text_area"] + sample["watermark_area"] > col["text"]:
        return False
    if sample.get("clip_sim") is None or sample["clip_sim"] < col["clip"]:
        return False
    return True


# ---------------------------------------------------------------------------
# Synthetic media
# ---------------------------------------------------------------------------


def solid_rgb_frames(colors: list[tuple[int, int, int]], lengths: list[int], width=32, height=18):
    """Frames made of solid-color runs; a hard cut sits at each run boundary."""
    rows = []
    for color, n in zip(colors, lengths):
        frame = np.empty((height, width, 3), dtype=np.uint8)
        frame[..., 0], frame[..., 1], frame[..., 2] = color
        rows.append(np.repeat(frame[np.newaxis], n, axis=0))
    return np.concatenate(rows, axis=0)


def rgb_pack(frames: np.ndarray, fps: int = 30) -> FramePack:
    return FramePack.from_array(np.ascontiguousarray(frames, dtype=np.uint8), fps_num=fps)


def uniform_gray_video_pack(level: int, frames: int, width=16, height=12, fps=30) -> FramePack:
    arr = np.full((frames, height, width, 3), level, dtype=np.uint8)
    return rgb_pack(arr, fps=fps)


def write_video_item(tmp_path, item_id: str, arr: np.ndarray, fps: int = 30) -> MediaItem:
    pack = rgb_pack(arr, fps=fps)
    path = tmp_path / f"{item_id}.fpk"
    write_framepack(pack, path)
    return MediaItem(
        id=item_id, kind="video", path=f"{item_id}.fpk",
        width=pack.width, height=pack.height,
        fps=float(fps), frame_count=pack.frame_count,
        duration_s=pack.frame_count / fps,
    )


def write_image_item(tmp_path, item_id: str, level: int = 128, width=800, height=600) -> MediaItem:
    arr = np.full((1, height, width, 3), level, dtype=np.uint8)
    pack = rgb_pack(arr, fps=1)
    path = tmp_path / f"{item_id}.fpk"
    write_framepack(pack, path)
    return MediaItem(id=item_id, kind="image", path=f"{item_id}.fpk", width=width, height=height)


# ---------------------------------------------------------------------------
# Fully scored records + the matching oracle sample dicts
# ---------------------------------------------------------------------------


def full_captions(kind: str, tag: str = "mock") -> CaptionSet:
    coarse = CoarseCaption(tags=[tag], text=f"a {tag} scene")
    if kind == "image":
        return CaptionSet(coarse=coarse, fine="A detailed still scene.")
    return CaptionSet(
        coarse=coarse,
        fine="A detailed moving scene. Camera pans left.",
        mid_frame_coarse=CoarseCaption(tags=[tag], text=f"a {tag} still"),
        mid_frame_fine="A detailed still scene.",
        camera_motions=["pans left"],
    )


def scored_record(sample: dict, record_id: str):
    """Build a record (plus nothing else) from a plain oracle sample."""
    metrics = MetricVector(
        brightness=sample.get("brightness"),
        dover=sample.get("dover"),
        lpips=sample.get("lpips"),
        unimatch=sample.get("unimatch"),
        aesthetic=sample.get("aesthetic"),
        text_area_pct=sample.get("text_area"),
        watermark_area_pct=sample.get("watermark_area"),
        clip_sim=sample.get("clip_sim"),
    )
    if sample["kind"] == "image":
        return MediaItem(
            id=record_id, kind="image", path=f"{record_id}.fpk",
            width=sample["width"], height=sample["height"],
            metrics=metrics, captions=full_captions("image"),
        )
    if sample.get("raw_video"):
        frame_count = int(round(sample["duration"] * sample["fps"]))
        sample["duration"] = frame_count / sample["fps"]  # realized duration
        return MediaItem(
            id=record_id, kind="video", path=f"{record_id}.fpk",
            width=sample["width"], height=sample["height"],
            fps=sample["fps"], frame_count=frame_count,
            duration_s=frame_count / sample["fps"],
            metrics=metrics, captions=full_captions("video"),
        )
    frames = int(round(sample["duration"] * 30))
    sample["duration"] = frames / 30.0
    return ClipRecord(
        id=record_id, parent_id=f"{record_id}-parent",
        span=(0, frames), fps=30.0, source_fps=30.0,
        duration_s=frames / 30.0,
        width=sample["width"], height=sample["height"],
        metrics=metrics, captions=full_captions("video"),
    )


def straddling_corpus(n: int, seed: int = 7) -> tuple[list, list[dict]]:
    """Records plus oracle samples with values straddling every bound.

    Durations are whole frame counts at 30 FPS so the clip invariant holds
    exactly; boundary picks (exactly 0.17, exactly 23 FPS, ...) exercise the
    inclusive/exclusive rules.
    """
    rng = random.Random(seed)
    durations = [1.5, 2.0, 4.0, 6.0, 10.0, 16.0, 16.5]
    fps_choices = [22.0, 23.0, 24.0, 30.0, 60.0, 61.0, 62.0]
    resolutions = [
        (639, 368), (640, 368), (640, 367), (1280, 720), (1279, 720),
        (1280, 719), (1920, 1080), (800, 600),
    ]
    brightness = [19.5, 20.0, 100.0, 180.0, 180.5]
    dovers = [0.06, 0.07, 0.12]
    lpipss = [0.04, 0.05, 0.2]
    unis = [0.5, 1.0, 50.0, 100.0, 120.0]
    aess = [4.7, 4.8, 4.9, 5.0, 5.25, 5.3, 5.6]
    texts = [0.0, 0.01, 0.02, 0.03, 0.05, 0.06]
    clips = [0.16, 0.17, 0.19, 0.2, 0.3]

    records = []
    samples = []
    for i in range(n):
        shape = rng.choice(["image", "clip", "clip", "raw_video"])
        w, h = rng.choice(resolutions)
        sample = {
            "kind": "image" if shape == "image" else "video",
            "raw_video": shape == "raw_video",
            "width": w,
            "height": h,
            "brightness": rng.choice(brightness),
            "dover": rng.choice(dovers),
            "lpips": rng.choice(lpipss),
            "unimatch": rng.choice(unis),
            "aesthetic": rng.choice(aess),
            "text_area": rng.choice(texts),
            "watermark_area": rng.choice([0.0, 0.0, 0.01, 0.02]),
            "clip_sim": rng.choice(clips),
        }
        if sample["kind"] == "video":
            sample["duration"] = rng.choice(durations)
            sample["fps"] = rng.choice(fps_choices) if shape == "raw_video" else 30.0
        record_id = f"rec{i:04d}"
        records.append(scored_record(sample, record_id))
        samples.append(sample)
    return records, samples
