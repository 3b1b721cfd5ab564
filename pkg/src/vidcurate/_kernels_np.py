"""Pure-numpy implementations of the pixel kernels.

Used when the compiled extension is unavailable (or when VIDCURATE_NO_EXT
is set). Must stay numerically interchangeable with ``_kernels.pyx``:
identical per-pixel formulas in float64, so results agree to well below
any documented tolerance.
"""

from __future__ import annotations

import numpy as np


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma, rounded half-up: gray = floor(0.299 R + 0.587 G + 0.114 B + 0.5)."""
    f = rgb.astype(np.float64)
    g = f[..., 0] * 0.299 + f[..., 1] * 0.587 + f[..., 2] * 0.114
    return np.minimum(np.floor(g + 0.5), 255.0).astype(np.uint8)


def _hsv255(rgb: np.ndarray) -> np.ndarray:
    """RGB8 -> HSV with all three channels scaled to [0, 255], float64."""
    f = rgb.astype(np.float64)
    r, g, b = f[..., 0], f[..., 1], f[..., 2]
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    d = mx - mn
    d_safe = np.where(d > 0, d, 1.0)
    # Branch order matters for ties: max==r, then max==g, then b.
    h = np.where(r == mx, (g - b) / d_safe, np.where(g == mx, (b - r) / d_safe + 2.0, (r - g) / d_safe + 4.0))
    h = np.where(h < 0, h + 6.0, h)
    h = np.where(d > 0, h * 42.5, 0.0)  # 60 deg/sector * 255/360
    s = np.where(mx > 0, d / np.where(mx > 0, mx, 1.0) * 255.0, 0.0)
    return np.stack([h, s, mx], axis=-1)


def hsv_diff_curve(frames: np.ndarray) -> np.ndarray:
    """Mean per-pixel (|dH| + |dS| + |dV|)/3 between adjacent frames.

    ``frames`` is (T, H, W, 3) uint8 with T >= 2; returns (T-1,) float64 in [0, 255].
    """
    hsv = _hsv255(frames)
    diff = np.abs(np.diff(hsv, axis=0)).sum(axis=-1) / 3.0
    return diff.mean(axis=(1, 2))


def absdiff_mean(frames: np.ndarray) -> float:
    """Mean |delta| over all adjacent frame pairs and pixels of (T, H, W) uint8."""
    d = np.abs(np.diff(frames.astype(np.int16), axis=0))
    return float(d.mean())
