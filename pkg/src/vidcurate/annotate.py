"""Caption-set assembly and caption-text analysis.

Camera motion is marked in fine captions by sentences of the form
``Camera <pattern>.``; extraction is a fixed sentence-initial literal match,
so no NLP tokenizer is involved. The fine-caption instruction builder embeds
the coarse caption and enumerates the required coverage (subjects and their
attributes, interactions, background, environment, style, atmosphere, camera
angle and motion, and, for videos, change over time).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ValidationError
from .manifest import CaptionSet, CoarseCaption

_SENTENCE_SPLIT = re.compile(r"[.!?]")
_CAMERA_PREFIX = "Camera "


@dataclass(frozen=True)
class CameraMotion:
    pattern: str
    sentence_index: int


def extract_camera_motion(fine_caption: str) -> list[CameraMotion]:
    """Patterns of sentences beginning with the literal word ``Camera``.

    The caption is split at ``.``, ``!`` and ``?``; each trimmed, non-empty
    sentence counts toward ``sentence_index``. Matching is case-sensitive.
    """
    out: list[CameraMotion] = []
    index = 0
    for part in _SENTENCE_SPLIT.split(fine_caption):
        sentence = part.strip()
        if not sentence:
            continue
        if sentence.startswith(_CAMERA_PREFIX):
            pattern = sentence[len(_CAMERA_PREFIX):].strip()
            if pattern:
                out.append(CameraMotion(pattern=pattern, sentence_index=index))
        index += 1
    return out


def build_fine_instruction(coarse: CoarseCaption, kind: str) -> str:
    """Deterministic captioning instruction embedding the coarse caption."""
    if kind not in ("image", "video"):
        raise ValidationError(f"kind must be image or video, got {kind!r}")
    parts = [f"Describe this {kind} in detail."]
    if coarse.tags:
        parts.append("Known tags: " + ", ".join(coarse.tags) + ".")
    parts.append(f'Preliminary summary: "{coarse.text}".')
    parts.append(
        "Cover the subjects and their attributes, interactions among the subjects, "
        "the background and environment, the style and atmosphere, and the camera "
        "angle and motion."
    )
    if kind == "video":
        parts.append("Describe how all of the above changes over the course of the video.")
    return " ".join(parts)


def assemble_caption_set(
    kind: str,
    coarse: CoarseCaption,
    fine: str,
    mid_coarse: CoarseCaption | None = None,
    mid_fine: str | None = None,
    require_mid: bool = False,
) -> CaptionSet:
    """Build a validated CaptionSet with camera motions from the fine caption.

    Images carry only the coarse and fine slots; supplying mid-frame slots for
    an image is an error, as is a missing mid-frame caption for a video when
    ``require_mid`` is set.
    """
    if kind == "image":
        if mid_coarse is not None or mid_fine is not None:
            raise ValidationError("images carry only coarse and fine captions")
    elif kind == "video":
        if require_mid and (mid_coarse is None or mid_fine is None):
            raise ValidationError("video caption set requires mid-frame captions")
    else:
        raise ValidationError(f"kind must be image or video, got {kind!r}")
    return CaptionSet(
        coarse=coarse,
        fine=fine,
        mid_frame_coarse=mid_coarse,
        mid_frame_fine=mid_fine,
        camera_motions=[m.pattern for m in extract_camera_motion(fine)],
    )
