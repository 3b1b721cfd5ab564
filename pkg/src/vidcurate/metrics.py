"""Built-in, dependency-free metrics.

Brightness is the only built-in that feeds the stage thresholds. The motion
and consistency proxies are rough stand-ins for the model-backed motion and
perceptual-dissimilarity scores; they are stored under their own keys
(``motion_proxy``, ``consistency_proxy``) and are never compared against the
thresholds calibrated for the external models.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ValidationError


def mid_frame_index(frame_count: int) -> int:
    """Index of the intermediate frame: floor(frame_count / 2)."""
    if frame_count < 1:
        raise ValidationError("frame_count must be >= 1")
    return frame_count // 2


def brightness(gray_frame: np.ndarray) -> float:
    """Arithmetic mean of a GRAY8 frame, in [0, 255]."""
    arr = np.asarray(gray_frame)
    if arr.size == 0:
        raise ValidationError("cannot take the brightness of a zero-pixel frame")
    return float(arr.astype(np.float64).mean())


def motion_proxy(gray_frames: np.ndarray) -> float:
    """Mean absolute inter-frame difference over (T >= 2, H, W) GRAY8 frames."""
    arr = np.asarray(gray_frames)
    if arr.ndim != 3 or arr.shape[0] < 2:
        raise ValidationError("motion_proxy requires at least 2 grayscale frames")
    return kernels.absdiff_mean(arr)


def consistency_proxy(gray_frames: np.ndarray) -> float:
    """Inter-frame change score in [0, 1] from adjacent-pair correlation.

    Each adjacent pair contributes (1 - r) / 2 where r is the Pearson
    correlation of the two frames; pairs involving a constant frame
    correlate as 1. A static video scores 0, a frame against its
    photographic negative scores 1, independent noise lands near 0.5.
    """
    arr = np.asarray(gray_frames, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] < 2:
        raise ValidationError("consistency_proxy requires at least 2 frames")
    scores = []
    for a, b in zip(arr[:-1], arr[1:]):
        sa, sb = a.std(), b.std()
        if sa == 0.0 or sb == 0.0:
            corr = 1.0
        else:
            corr = float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))
        scores.append((1.0 - corr) / 2.0)
    return float(min(1.0, max(0.0, sum(scores) / len(scores))))


def cosine_similarity(a, b) -> float:
    """dot(a, b) / (|a| |b|), in [-1, 1]. Errors on length mismatch or zero vectors."""
    va = np.asarray(a, dtype=np.float64).ravel()
    vb = np.asarray(b, dtype=np.float64).ravel()
    if va.shape != vb.shape:
        raise ValidationError(f"embedding dimensions differ: {va.shape[0]} vs {vb.shape[0]}")
    if va.size == 0:
        raise ValidationError("embeddings must have dim >= 1")
    ma, mb = np.abs(va).max(), np.abs(vb).max()
    if ma == 0.0 or mb == 0.0:
        raise ValidationError("cosine similarity of a zero vector is undefined")
    # Pre-scaling by the max magnitude keeps the squared norms away from
    # underflow, which would otherwise push the ratio outside [-1, 1].
    va = va / ma
    vb = vb / mb
    value = np.dot(va, vb) / (np.linalg.norm(va) * np.linalg.norm(vb))
    return float(min(1.0, max(-1.0, value)))
