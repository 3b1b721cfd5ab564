"""Frame-level media access.

Defines the FPK1 raw frame container (bit-exact, little-endian), an adapter
for external decoders/re-encoders driven by a command template, frame
sampling, and RGB-to-grayscale conversion.

FPK1 file layout, little-endian:

===========  =====  =======================================
offset       size   field
===========  =====  =======================================
0            4      magic ``FPK1``
4            4      u32 width
8            4      u32 height
12           4      u32 frame_count
16           4      u32 fps_num
20           4      u32 fps_den
24           1      u8 pixel_format (0 = RGB8, 1 = GRAY8)
25           3      zero padding
28           ...    frame payloads, back to back
===========  =====  =======================================

Frames are row-major from the top-left; RGB8 is interleaved. The payload
must hold exactly ``frame_count * width * height * channels`` bytes.
"""

from __future__ import annotations

import math
import os
import struct
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ExternalToolError, FramePackError, ValidationError
from .manifest import Violation

MAGIC = b"FPK1"
HEADER_FMT = "<4sIIIIIB3x"
HEADER_SIZE = struct.calcsize(HEADER_FMT)

PIXEL_RGB8 = 0
PIXEL_GRAY8 = 1
_CHANNELS = {PIXEL_RGB8: 3, PIXEL_GRAY8: 1}


@dataclass
class FramePack:
    """An in-memory raw frame container."""

    width: int
    height: int
    frame_count: int
    fps_num: int
    fps_den: int
    pixel_format: int
    data: bytes

    @property
    def channels(self) -> int:
        return _CHANNELS[self.pixel_format]

    @property
    def fps(self) -> float:
        return self.fps_num / self.fps_den

    @property
    def frame_size(self) -> int:
        return self.width * self.height * self.channels

    def validate(self) -> list[Violation]:
        out = []
        if self.pixel_format not in _CHANNELS:
            out.append(Violation("pixel_format", f"unknown code {self.pixel_format}"))
            return out
        if self.width < 1 or self.height < 1:
            out.append(Violation("width/height", "must be >= 1"))
        if self.frame_count < 1:
            out.append(Violation("frame_count", "must be >= 1"))
        if self.fps_den <= 0:
            out.append(Violation("fps_den", "must be > 0"))
        expected = self.frame_count * self.frame_size
        if len(self.data) != expected:
            out.append(
                Violation("data", f"payload holds {len(self.data)} bytes, expected {expected}")
            )
        return out

    def as_array(self) -> np.ndarray:
        """View the payload as (T, H, W, 3) for RGB8 or (T, H, W) for GRAY8."""
        arr = np.frombuffer(self.data, dtype=np.uint8)
        if self.pixel_format == PIXEL_RGB8:
            return arr.reshape(self.frame_count, self.height, self.width, 3)
        return arr.reshape(self.frame_count, self.height, self.width)

    def frame(self, index: int) -> np.ndarray:
        return self.as_array()[index]

    @classmethod
    def from_array(cls, arr: np.ndarray, fps_num: int, fps_den: int = 1) -> "FramePack":
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        if arr.ndim == 4 and arr.shape[-1] == 3:
            pf = PIXEL_RGB8
        elif arr.ndim == 3:
            pf = PIXEL_GRAY8
        else:
            raise ValidationError(f"cannot infer pixel format from array shape {arr.shape}")
        t, h, w = arr.shape[:3]
        return cls(
            width=w, height=h, frame_count=t,
            fps_num=fps_num, fps_den=fps_den,
            pixel_format=pf, data=arr.tobytes(),
        )


@dataclass
class SamplingSpec:
    """Take every ``interval``-th frame, starting at index 0.

    The customary interval choices are 1, 3, 5, or 10; any interval >= 1
    is accepted.
    """

    interval: int = 1

    def validate(self) -> list[Violation]:
        if self.interval < 1:
            return [Violation("interval", "must be >= 1")]
        return []


def write_framepack(pack: FramePack, path: str | os.PathLike) -> int:
    """Write a pack in the FPK1 layout; returns total bytes written (28 + payload)."""
    violations = pack.validate()
    if violations:
        raise ValidationError("invalid FramePack: " + "; ".join(map(str, violations)))
    header = struct.pack(
        HEADER_FMT, MAGIC, pack.width, pack.height, pack.frame_count,
        pack.fps_num, pack.fps_den, pack.pixel_format,
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(pack.data)
    except OSError as exc:
        raise FramePackError(f"cannot write {path}: {exc}") from exc
    return HEADER_SIZE + len(pack.data)


def read_framepack(path: str | os.PathLike) -> FramePack:
    """Read and validate an FPK1 file."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise FramePackError(f"cannot read {path}: {exc}") from exc
    if len(raw) < HEADER_SIZE:
        raise FramePackError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    magic, width, height, frame_count, fps_num, fps_den, pf = struct.unpack(
        HEADER_FMT, raw[:HEADER_SIZE]
    )
    if magic != MAGIC:
        raise FramePackError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if pf not in _CHANNELS:
        raise FramePackError(f"{path}: unknown pixel_format code {pf}")
    expected = frame_count * width * height * _CHANNELS[pf]
    payload = raw[HEADER_SIZE:]
    if len(payload) != expected:
        raise FramePackError(
            f"{path}: truncated payload, expected {expected} bytes but found {len(payload)}"
        )
    pack = FramePack(
        width=width, height=height, frame_count=frame_count,
        fps_num=fps_num, fps_den=fps_den, pixel_format=pf, data=payload,
    )
    violations = pack.validate()
    if violations:
        raise FramePackError(f"{path}: " + "; ".join(map(str, violations)))
    return pack


def decode_external(
    video_path: str | os.PathLike,
    command_template: str,
    target_fps: int = 30,
) -> FramePack:
    """Decode and re-encode a video through an external tool.

    The template must contain ``{input}``, ``{output}`` and ``{fps}``
    placeholders. The tool is expected to write an FPK1 file to ``{output}``
    at exactly ``target_fps``; a nonzero exit status raises with the captured
    stderr. See the README for a documented ffmpeg-based template.
    """
    for placeholder in ("{input}", "{output}", "{fps}"):
        if placeholder not in command_template:
            raise ValidationError(f"command template is missing the {placeholder} placeholder")
    fd, out_path = tempfile.mkstemp(suffix=".fpk")
    os.close(fd)
    try:
        cmd = command_template.format(input=str(video_path), output=out_path, fps=target_fps)
        proc = subprocess.run(cmd, shell=True, capture_output=True, text=True)
        if proc.returncode != 0:
            raise ExternalToolError(
                f"decoder exited with status {proc.returncode}: {proc.stderr.strip()}",
                stderr=proc.stderr,
            )
        pack = read_framepack(out_path)
    finally:
        try:
            os.unlink(out_path)
        except OSError:
            pass
    if pack.fps_num != target_fps * pack.fps_den:
        raise FramePackError(
            f"decoder produced {pack.fps_num}/{pack.fps_den} fps, expected {target_fps}"
        )
    return pack


def sample_frames(pack: FramePack, spec: SamplingSpec) -> FramePack:
    """Keep frames 0, interval, 2*interval, ...; fps scales by 1/interval."""
    violations = spec.validate()
    if violations:
        raise ValidationError("invalid SamplingSpec: " + "; ".join(map(str, violations)))
    if spec.interval == 1:
        return pack
    arr = pack.as_array()[:: spec.interval]
    num, den = pack.fps_num, pack.fps_den * spec.interval
    g = math.gcd(num, den)
    return FramePack(
        width=pack.width,
        height=pack.height,
        frame_count=arr.shape[0],
        fps_num=num // g,
        fps_den=den // g,
        pixel_format=pack.pixel_format,
        data=np.ascontiguousarray(arr).tobytes(),
    )


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """BT.601 grayscale of one RGB8 frame: round(0.299 R + 0.587 G + 0.114 B)."""
    return kernels.rgb_to_gray(frame)


def pack_to_grayscale(pack: FramePack) -> FramePack:
    """Convert a whole RGB8 pack to GRAY8 (no-op for GRAY8 input)."""
    if pack.pixel_format == PIXEL_GRAY8:
        return pack
    gray = kernels.rgb_to_gray(pack.as_array())
    return FramePack(
        width=pack.width, height=pack.height, frame_count=pack.frame_count,
        fps_num=pack.fps_num, fps_den=pack.fps_den,
        pixel_format=PIXEL_GRAY8, data=gray.tobytes(),
    )
