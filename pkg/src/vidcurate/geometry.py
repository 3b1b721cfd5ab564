"""Model-geometry planning: latent shapes, tiled encode/decode spans with
linear blend weights, and frame-sampling arithmetic.

The compression stride is 4x8x8 (time, height, width) with 4 latent
channels, so a T x 3 x H x W video maps to T/4 x 4 x H/8 x W/8. Tiled
inference uses encoder tiles of 24 x p x p pixels and decoder tiles of
6 x p/8 x p/8 latents; adjacent tiles share an overlapped region that is
blended with per-axis linear ramps. Two published tiling configurations are
provided as presets: p=256 with overlaps 8x64x144, and p=320 with overlaps
8x80x120.

"Overlapping stride" is read here as the overlap amount between adjacent
tiles (placement step = tile - overlap). The alternative reading, where the
value is the step itself, is selectable via ``overlap_mode="step"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ValidationError
from .manifest import Record

Span = tuple[int, int]


@dataclass(frozen=True)
class GeometryConfig:
    latent_channels: int = 4
    stride_t: int = 4
    stride_h: int = 8
    stride_w: int = 8
    encoder_tile_t: int = 24
    decoder_tile_t: int = 6
    tile_p: int = 320
    overlap_t: int = 8
    overlap_h: int = 80
    overlap_w: int = 120
    overlap_mode: str = "overlap"  # "overlap": step = tile - v; "step": step = v
    model_frames: int = 88

    @classmethod
    def preset_320p(cls) -> "GeometryConfig":
        return cls(tile_p=256, overlap_t=8, overlap_h=64, overlap_w=144)

    @classmethod
    def preset_720p(cls) -> "GeometryConfig":
        return cls(tile_p=320, overlap_t=8, overlap_h=80, overlap_w=120)

    def validate(self) -> list[str]:
        problems = []
        if self.tile_p % 8 != 0:
            problems.append(f"tile_p {self.tile_p} must be divisible by 8")
        if self.overlap_t % 4 != 0:
            problems.append(f"overlap_t {self.overlap_t} must be divisible by 4")
        if self.overlap_h % 8 != 0:
            problems.append(f"overlap_h {self.overlap_h} must be divisible by 8")
        if self.overlap_w % 8 != 0:
            problems.append(f"overlap_w {self.overlap_w} must be divisible by 8")
        if self.overlap_mode not in ("overlap", "step"):
            problems.append(f"overlap_mode must be 'overlap' or 'step', not {self.overlap_mode!r}")
        for axis, tile, ov in self._axis_specs("encoder"):
            if not 0 < ov < tile:
                problems.append(f"encoder {axis}: overlap {ov} must be inside (0, tile {tile})")
        for axis, tile, ov in self._axis_specs("decoder"):
            if not 0 < ov < tile:
                problems.append(f"decoder {axis}: overlap {ov} must be inside (0, tile {tile})")
        if self.latent_channels < 1:
            problems.append("latent_channels must be >= 1")
        if min(self.stride_t, self.stride_h, self.stride_w) < 1:
            problems.append("strides must be >= 1")
        if self.model_frames < 1:
            problems.append("model_frames must be >= 1")
        return problems

    def _axis_specs(self, side: str) -> list[tuple[str, int, int]]:
        """(axis, tile, overlap) triples in that side's coordinate system."""
        if side == "encoder":
            return [
                ("t", self.encoder_tile_t, self.overlap_t),
                ("h", self.tile_p, self.overlap_h),
                ("w", self.tile_p, self.overlap_w),
            ]
        if side == "decoder":
            return [
                ("t", self.decoder_tile_t, self.overlap_t // self.stride_t),
                ("h", self.tile_p // self.stride_h, self.overlap_h // self.stride_h),
                ("w", self.tile_p // self.stride_w, self.overlap_w // self.stride_w),
            ]
        raise ValidationError(f"side must be 'encoder' or 'decoder', not {side!r}")

    def to_json(self) -> dict:
        return {
            "latent_channels": self.latent_channels,
            "strides": [self.stride_t, self.stride_h, self.stride_w],
            "encoder_tile_t": self.encoder_tile_t,
            "decoder_tile_t": self.decoder_tile_t,
            "tile_p": self.tile_p,
            "overlap": [self.overlap_t, self.overlap_h, self.overlap_w],
            "overlap_mode": self.overlap_mode,
            "model_frames": self.model_frames,
        }

    @classmethod
    def from_json(cls, d: dict) -> "GeometryConfig":
        base = cls()
        st, sh, sw = d.get("strides", [base.stride_t, base.stride_h, base.stride_w])
        ot, oh, ow = d.get("overlap", [base.overlap_t, base.overlap_h, base.overlap_w])
        return cls(
            latent_channels=d.get("latent_channels", base.latent_channels),
            stride_t=st, stride_h=sh, stride_w=sw,
            encoder_tile_t=d.get("encoder_tile_t", base.encoder_tile_t),
            decoder_tile_t=d.get("decoder_tile_t", base.decoder_tile_t),
            tile_p=d.get("tile_p", base.tile_p),
            overlap_t=ot, overlap_h=oh, overlap_w=ow,
            overlap_mode=d.get("overlap_mode", base.overlap_mode),
            model_frames=d.get("model_frames", base.model_frames),
        )


def latent_shape(t: int, h: int, w: int, config: GeometryConfig) -> tuple[int, int, int, int]:
    """(T', C_l, H', W') = (T/4, 4, H/8, W/8) under the default strides."""
    for axis, extent, stride in (
        ("t", t, config.stride_t),
        ("h", h, config.stride_h),
        ("w", w, config.stride_w),
    ):
        if extent % stride != 0:
            raise ValidationError(
                f"axis {axis}: extent {extent} is not divisible by stride {stride}"
            )
    return (t // config.stride_t, config.latent_channels, h // config.stride_h, w // config.stride_w)


def plan_axis(extent: int, tile: int, overlap: int) -> list[Span]:
    """Place full-size tiles along one axis, end-aligning the last one.

    Starts are 0, step, 2*step, ... with step = tile - overlap, while the
    tile fits; if coverage stops short of the extent a final span
    [extent - tile, extent) is appended, so the actual overlap there may
    exceed the nominal one.
    """
    if not 0 < overlap < tile:
        raise ValidationError(f"overlap {overlap} must satisfy 0 < overlap < tile {tile}")
    if tile > extent:
        raise ValidationError(f"tile {tile} exceeds extent {extent}")
    step = tile - overlap
    spans: list[Span] = []
    start = 0
    while start + tile <= extent:
        spans.append((start, start + tile))
        start += step
    if spans[-1][1] < extent:
        spans.append((extent - tile, extent))
    return spans


@dataclass
class TilePlan:
    """Per-axis spans over (t, h, w); tiles enumerate in product order."""

    extents: tuple[int, int, int]
    axes: list[list[Span]]

    def tile_count(self) -> int:
        return math.prod(len(spans) for spans in self.axes)

    def tiles(self):
        for st in self.axes[0]:
            for sh in self.axes[1]:
                for sw in self.axes[2]:
                    yield (st, sh, sw)

    def validate(self) -> list[str]:
        problems = []
        for axis, (extent, spans) in enumerate(zip(self.extents, self.axes)):
            if not spans:
                problems.append(f"axis {axis}: no spans")
                continue
            if spans[0][0] != 0 or spans[-1][1] != extent:
                problems.append(f"axis {axis}: spans do not cover [0, {extent})")
            covered = spans[0][1]
            for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
                if a1 < a0:
                    problems.append(f"axis {axis}: starts decrease at {a1}")
                if a1 > covered:
                    problems.append(f"axis {axis}: gap before {a1}")
                covered = max(covered, b1)
            if any(b - a < 1 or a < 0 or b > extent for a, b in spans):
                problems.append(f"axis {axis}: span out of bounds")
        return problems

    def scaled(self, strides: tuple[int, int, int]) -> "TilePlan":
        """The same plan in a coordinate system divided by per-axis strides."""
        axes = []
        for axis, (spans, stride) in enumerate(zip(self.axes, strides)):
            scaled_spans = []
            for a, b in spans:
                if a % stride or b % stride:
                    raise ValidationError(
                        f"axis {axis}: span [{a}, {b}) not divisible by stride {stride}"
                    )
                scaled_spans.append((a // stride, b // stride))
            axes.append(scaled_spans)
        extents = tuple(e // s for e, s in zip(self.extents, strides))
        return TilePlan(extents=extents, axes=axes)  # type: ignore[arg-type]


def plan_tiles(t: int, h: int, w: int, config: GeometryConfig, side: str) -> TilePlan:
    """Tile spans for the encoder (pixel space) or decoder (latent space).

    ``t``, ``h``, ``w`` are the extents in that side's own coordinate system.
    Axes shorter than one tile get a single covering span.
    """
    problems = config.validate()
    if problems:
        raise ValidationError("invalid geometry config: " + "; ".join(problems))
    extents = (t, h, w)
    axes: list[list[Span]] = []
    for (axis, tile, v), extent in zip(config._axis_specs(side), extents):
        if extent < 1:
            raise ValidationError(f"axis {axis}: extent must be >= 1")
        if extent <= tile:
            axes.append([(0, extent)])
            continue
        if config.overlap_mode == "step":
            overlap = tile - v
            if not 0 < overlap < tile:
                raise ValidationError(
                    f"axis {axis}: step {v} incompatible with tile {tile}"
                )
        else:
            overlap = v
        axes.append(plan_axis(extent, tile, overlap))
    return TilePlan(extents=extents, axes=axes)


@dataclass
class BlendWeights:
    """Per-axis, per-span weight ramps, normalized to a partition of unity.

    ``axis_weights[a][i]`` is the normalized weight profile of span i along
    axis a; for every position the profiles of the covering spans sum to 1.
    The effective weight of a tile at a voxel is the product over axes.
    """

    plan: TilePlan
    axis_weights: list[list[np.ndarray]] = field(default_factory=list)

    def tile_weight(self, indices: tuple[int, int, int]) -> np.ndarray:
        wt = self.axis_weights[0][indices[0]]
        wh = self.axis_weights[1][indices[1]]
        ww = self.axis_weights[2][indices[2]]
        return wt[:, None, None] * wh[None, :, None] * ww[None, None, :]


def _raw_axis_weights(spans: list[Span]) -> list[np.ndarray]:
    """Linear ramps: 1 in the interior, rising (j+1)/(L+1) over each
    overlapped region of actual length L, so edge weights stay above zero."""
    out = []
    for i, (a, b) in enumerate(spans):
        n = b - a
        w = np.ones(n, dtype=np.float64)
        left = min(max(spans[i - 1][1] - a, 0), n) if i > 0 else 0
        right = min(max(b - spans[i + 1][0], 0), n) if i + 1 < len(spans) else 0
        for j in range(left):
            w[j] = min(w[j], (j + 1) / (left + 1))
        for j in range(right):
            w[n - 1 - j] = min(w[n - 1 - j], (j + 1) / (right + 1))
        out.append(w)
    return out


def blend_weights(plan: TilePlan) -> BlendWeights:
    """Normalized linear blending weights for a plan.

    Separability makes the 3D normalization per-axis: dividing each span's
    ramp by the per-position sum over covering spans guarantees the product
    weights sum to 1 at every voxel.
    """
    problems = plan.validate()
    if problems:
        raise ValidationError("invalid tile plan: " + "; ".join(problems))
    axis_weights: list[list[np.ndarray]] = []
    for extent, spans in zip(plan.extents, plan.axes):
        raw = _raw_axis_weights(spans)
        denom = np.zeros(extent, dtype=np.float64)
        for (a, b), w in zip(spans, raw):
            denom[a:b] += w
        axis_weights.append([w / denom[a:b] for (a, b), w in zip(spans, raw)])
    return BlendWeights(plan=plan, axis_weights=axis_weights)


def tiled_map(
    data: np.ndarray,
    plan: TilePlan,
    weights: BlendWeights,
    transform: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    """Apply a per-tile transform and blend the results.

    ``data``'s first three axes must match the plan extents; trailing axes
    (channels) pass through. The transform must preserve the tile shape or
    shrink each of the three axes by one uniform integer stride (the latent
    mapping), in which case the plan is rescaled and fresh weights are
    computed for the output grid. Tiles are accumulated in plan order, so
    the result does not depend on how transforms are scheduled.
    """
    if tuple(data.shape[:3]) != plan.extents:
        raise ValidationError(f"data shape {data.shape[:3]} does not match plan {plan.extents}")
    out_strides: tuple[int, int, int] | None = None
    out: np.ndarray | None = None
    out_weights = weights
    out_plan = plan
    for indices, (st, sh, sw) in zip(np.ndindex(*(len(a) for a in plan.axes)), plan.tiles()):
        tile = data[st[0] : st[1], sh[0] : sh[1], sw[0] : sw[1]]
        mapped = np.asarray(transform(tile))
        if mapped.shape[3:] != tile.shape[3:]:
            raise ValidationError(
                f"transform changed trailing dims {tile.shape[3:]} -> {mapped.shape[3:]}"
            )
        if out_strides is None:
            strides = []
            for before, after in zip(tile.shape[:3], mapped.shape[:3]):
                if after < 1 or before % after:
                    raise ValidationError(
                        f"transform output extent {after} does not divide input {before}"
                    )
                strides.append(before // after)
            out_strides = (strides[0], strides[1], strides[2])
            if out_strides != (1, 1, 1):
                out_plan = plan.scaled(out_strides)
                out_weights = blend_weights(out_plan)
            out = np.zeros(out_plan.extents + mapped.shape[3:], dtype=np.float64)
        expected = tuple(
            (b - a) // s for (a, b), s in zip((st, sh, sw), out_strides)
        )
        if tuple(mapped.shape[:3]) != expected:
            raise ValidationError(
                f"transform output shape {mapped.shape[:3]} != expected {expected}"
            )
        ot, oh, ow = (
            (st[0] // out_strides[0], st[1] // out_strides[0]),
            (sh[0] // out_strides[1], sh[1] // out_strides[1]),
            (sw[0] // out_strides[2], sw[1] // out_strides[2]),
        )
        w3 = out_weights.tile_weight(indices)
        w3 = w3.reshape(w3.shape + (1,) * (mapped.ndim - 3))
        out[ot[0] : ot[1], oh[0] : oh[1], ow[0] : ow[1]] += w3 * mapped
    assert out is not None
    return out


@dataclass(frozen=True)
class SamplingPlan:
    stride: int
    source_frames_needed: int
    window_s: float


def sampling_plan(source_fps: int = 30, target_fps: int = 15, model_frames: int = 88) -> SamplingPlan:
    """Source-frame demand when sampling every ``stride``-th frame.

    The model's frames sit at source indices 0, stride, ..., so the last one
    is index stride*(model_frames - 1) and the source must supply
    stride*model_frames - (stride - 1) frames spanning a window of
    (source_frames_needed - 1)/source_fps seconds.
    """
    if source_fps < 1 or target_fps < 1 or model_frames < 1:
        raise ValidationError("fps values and model_frames must be >= 1")
    if source_fps % target_fps != 0:
        raise ValidationError(f"source fps {source_fps} not divisible by target fps {target_fps}")
    stride = source_fps // target_fps
    needed = stride * model_frames - (stride - 1)
    return SamplingPlan(
        stride=stride,
        source_frames_needed=needed,
        window_s=(needed - 1) / source_fps,
    )


@dataclass
class CompatReport:
    ok: bool
    reasons: list[str] = field(default_factory=list)


def check_compat(
    record: Record,
    config: GeometryConfig,
    thresholds,
    model_frames: int | None = None,
    source_fps: int = 30,
    target_fps: int = 15,
) -> CompatReport:
    """Can this clip feed the model at this stage?

    Requires enough 30 FPS source frames for the sampling plan and a
    post-crop resolution meeting the stage minimum.
    """
    frames_needed = sampling_plan(
        source_fps, target_fps, model_frames if model_frames is not None else config.model_frames
    ).source_frames_needed
    reasons = []
    if getattr(record, "span", None) is not None:
        available = record.span[1] - record.span[0]
    elif getattr(record, "frame_count", None) is not None:
        available = record.frame_count
    elif getattr(record, "duration_s", None) is not None:
        available = int(math.floor(record.duration_s * source_fps))
    else:
        available = 0
        reasons.append("record carries no frame count or duration")
    if available < frames_needed:
        reasons.append(
            f"supplies {available} frames at {source_fps} FPS but the model window needs {frames_needed}"
        )
    if record.width < thresholds.min_width or record.height < thresholds.min_height:
        reasons.append(
            f"post-crop resolution {record.width}x{record.height} below stage minimum "
            f"{thresholds.min_width}x{thresholds.min_height}"
        )
    return CompatReport(ok=not reasons, reasons=reasons)
