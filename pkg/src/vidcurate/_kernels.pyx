# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel kernels: BT.601 grayscale, HSV frame-difference curve,
and mean absolute inter-frame difference.

Each function mirrors the formulas in ``_kernels_np.py`` with the same
float64 arithmetic; only summation order may differ.
"""

from libc.math cimport fabs, floor

import numpy as np


def rgb_to_gray(const unsigned char[:, :, :, ::1] rgb not None):
    cdef Py_ssize_t t, y, x
    cdef Py_ssize_t nt = rgb.shape[0], ny = rgb.shape[1], nx = rgb.shape[2]
    cdef double g
    out = np.empty((nt, ny, nx), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] o = out
    with nogil:
        for t in range(nt):
            for y in range(ny):
                for x in range(nx):
                    g = rgb[t, y, x, 0] * 0.299 + rgb[t, y, x, 1] * 0.587 + rgb[t, y, x, 2] * 0.114
                    g = floor(g + 0.5)
                    if g > 255.0:
                        g = 255.0
                    o[t, y, x] = <unsigned char> g
    return out


cdef inline void _pixel_hsv(double r, double g, double b, double* h, double* s, double* v) nogil:
    cdef double mx = r, mn = r, d
    if g > mx:
        mx = g
    if b > mx:
        mx = b
    if g < mn:
        mn = g
    if b < mn:
        mn = b
    d = mx - mn
    v[0] = mx
    s[0] = d / mx * 255.0 if mx > 0 else 0.0
    if d > 0:
        if r == mx:
            h[0] = (g - b) / d
        elif g == mx:
            h[0] = (b - r) / d + 2.0
        else:
            h[0] = (r - g) / d + 4.0
        if h[0] < 0:
            h[0] += 6.0
        h[0] *= 42.5
    else:
        h[0] = 0.0


cdef void _frame_hsv(const unsigned char[:, :, :, ::1] rgb, Py_ssize_t t,
                     double[:, :, ::1] dest) nogil:
    cdef Py_ssize_t y, x
    for y in range(rgb.shape[1]):
        for x in range(rgb.shape[2]):
            _pixel_hsv(
                rgb[t, y, x, 0], rgb[t, y, x, 1], rgb[t, y, x, 2],
                &dest[y, x, 0], &dest[y, x, 1], &dest[y, x, 2],
            )


def hsv_diff_curve(const unsigned char[:, :, :, ::1] rgb not None):
    cdef Py_ssize_t t, y, x
    cdef Py_ssize_t nt = rgb.shape[0], ny = rgb.shape[1], nx = rgb.shape[2]
    cdef double acc
    cdef double npix = <double> (ny * nx)
    out = np.empty(nt - 1, dtype=np.float64)
    cdef double[::1] o = out
    # Two HSV frame buffers, swapped each step, so every frame converts once.
    buf_a = np.empty((ny, nx, 3), dtype=np.float64)
    buf_b = np.empty((ny, nx, 3), dtype=np.float64)
    cdef double[:, :, ::1] prev = buf_a
    cdef double[:, :, ::1] curr = buf_b
    cdef double[:, :, ::1] tmp
    with nogil:
        _frame_hsv(rgb, 0, prev)
        for t in range(nt - 1):
            _frame_hsv(rgb, t + 1, curr)
            acc = 0.0
            for y in range(ny):
                for x in range(nx):
                    acc += (
                        fabs(curr[y, x, 0] - prev[y, x, 0])
                        + fabs(curr[y, x, 1] - prev[y, x, 1])
                        + fabs(curr[y, x, 2] - prev[y, x, 2])
                    ) / 3.0
            o[t] = acc / npix
            tmp = prev
            prev = curr
            curr = tmp
    return out


def absdiff_mean(const unsigned char[:, :, ::1] frames not None):
    cdef Py_ssize_t t, y, x
    cdef Py_ssize_t nt = frames.shape[0], ny = frames.shape[1], nx = frames.shape[2]
    cdef double acc = 0.0
    cdef int d
    with nogil:
        for t in range(nt - 1):
            for y in range(ny):
                for x in range(nx):
                    d = <int> frames[t + 1, y, x] - <int> frames[t, y, x]
                    acc += d if d >= 0 else -d
    return acc / (<double> ((nt - 1) * ny * nx))
