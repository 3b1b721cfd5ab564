"""Pixel-kernel dispatch: compiled extension when available, numpy otherwise.

The compiled core (``vidcurate._kernels``, built from Cython) and the numpy
fallback (``vidcurate._kernels_np``) implement the same contracts; which one
backs this module is decided once at import. Set ``VIDCURATE_NO_EXT=1`` to
force the fallback, e.g. for benchmarking (see ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_np

if os.environ.get("VIDCURATE_NO_EXT"):
    _impl = _kernels_np
    HAVE_EXT = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        HAVE_EXT = True
    except ImportError:
        _impl = _kernels_np
        HAVE_EXT = False


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Convert RGB8 frames to GRAY8 via BT.601 luma (round half-up).

    Accepts (H, W, 3) or (T, H, W, 3) uint8; returns the same shape minus
    the channel axis.
    """
    arr = np.ascontiguousarray(rgb, dtype=np.uint8)
    if arr.ndim == 3:
        arr = arr[np.newaxis]
        if arr.shape[-1] != 3:
            raise ValueError(f"expected (..., 3) RGB frames, got shape {rgb.shape}")
        return np.asarray(_impl.rgb_to_gray(arr))[0]
    if arr.ndim != 4 or arr.shape[-1] != 3:
        raise ValueError(f"expected (..., 3) RGB frames, got shape {rgb.shape}")
    return np.asarray(_impl.rgb_to_gray(arr))


def hsv_diff_curve(frames: np.ndarray) -> np.ndarray:
    """Per adjacent frame pair, mean pixel (|dH|+|dS|+|dV|)/3 in HSV-255 space."""
    arr = np.ascontiguousarray(frames, dtype=np.uint8)
    if arr.ndim != 4 or arr.shape[-1] != 3 or arr.shape[0] < 2:
        raise ValueError(f"expected (T>=2, H, W, 3) RGB frames, got shape {frames.shape}")
    return np.asarray(_impl.hsv_diff_curve(arr))


def absdiff_mean(frames: np.ndarray) -> float:
    """Mean absolute inter-frame difference of (T>=2, H, W) grayscale frames."""
    arr = np.ascontiguousarray(frames, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[0] < 2:
        raise ValueError(f"expected (T>=2, H, W) gray frames, got shape {frames.shape}")
    return float(_impl.absdiff_mean(arr))
