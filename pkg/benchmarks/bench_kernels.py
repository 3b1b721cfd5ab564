#!/usr/bin/env python3
"""Benchmark the compiled pixel kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--frames N] [--size WxH] [--repeat R]

Both implementations are imported directly, so this runs regardless of which
one the package selected at import.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from vidcurate import _kernels_np

try:
    from vidcurate import _kernels
except ImportError:
    _kernels = None


def timeit(fn, repeat: int) -> float:
    best = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best.append(time.perf_counter() - start)
    return statistics.median(best)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=120)
    parser.add_argument("--size", default="320x180")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    width, height = (int(v) for v in args.size.split("x"))

    rng = np.random.default_rng(0)
    rgb = rng.integers(0, 256, size=(args.frames, height, width, 3), dtype=np.uint8)
    gray = rng.integers(0, 256, size=(args.frames, height, width), dtype=np.uint8)

    cases = [
        ("rgb_to_gray", lambda impl: impl.rgb_to_gray(rgb)),
        ("hsv_diff_curve", lambda impl: impl.hsv_diff_curve(rgb)),
        ("absdiff_mean", lambda impl: impl.absdiff_mean(gray)),
    ]

    print(f"frames={args.frames} size={width}x{height} repeat={args.repeat} (median seconds)")
    print(f"{'kernel':<16} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, call in cases:
        t_np = timeit(lambda: call(_kernels_np), args.repeat)
        if _kernels is None:
            print(f"{name:<16} {t_np:>10.4f} {'n/a':>10} {'n/a':>8}")
            continue
        t_ext = timeit(lambda: call(_kernels), args.repeat)
        print(f"{name:<16} {t_np:>10.4f} {t_ext:>10.4f} {t_np / t_ext:>7.2f}x")


if __name__ == "__main__":
    main()
