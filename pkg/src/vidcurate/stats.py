"""Dataset statistics: duration buckets, metric histograms, tag distribution.

Binning is left-closed/right-open with the final bin closed, so the duration
buckets tile [2, 16] without double counting: [2, 6), [6, 10), [10, 16].
Out-of-range values are tallied separately, which gives every histogram the
conservation property in-range + below + above = population carrying the key.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

from .errors import ValidationError
from .manifest import Record

DURATION_EDGES = (2.0, 6.0, 10.0, 16.0)


@dataclass
class Histogram:
    metric_key: str
    bin_edges: list[float]
    counts: list[int]
    below: int = 0
    above: int = 0

    @property
    def population(self) -> int:
        return sum(self.counts) + self.below + self.above


@dataclass
class DurationBuckets:
    """Counts for the short / medium / long duration buckets."""

    short: int = 0  # [2, 6)
    medium: int = 0  # [6, 10)
    long: int = 0  # [10, 16]
    below: int = 0
    above: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.short, self.medium, self.long)


@dataclass
class DatasetStats:
    duration: DurationBuckets
    histograms: list[Histogram] = field(default_factory=list)
    tags: list[tuple[str, int]] = field(default_factory=list)


def _bin_value(value: float, edges: list[float] | tuple[float, ...]) -> int | None:
    """Bin index for left-closed bins with a closed final bin; None if out of range."""
    if value < edges[0] or value > edges[-1]:
        return None
    if value == edges[-1]:
        return len(edges) - 2
    for i in range(len(edges) - 1):
        if edges[i] <= value < edges[i + 1]:
            return i
    raise AssertionError("unreachable: value inside edge range")


def duration_buckets(records: list[Record]) -> DurationBuckets:
    """Bucket video durations into [2, 6), [6, 10), [10, 16]."""
    out = DurationBuckets()
    for rec in records:
        d = getattr(rec, "duration_s", None)
        if d is None:
            continue
        if d < DURATION_EDGES[0]:
            out.below += 1
        elif d > DURATION_EDGES[-1]:
            out.above += 1
        else:
            idx = _bin_value(d, DURATION_EDGES)
            if idx == 0:
                out.short += 1
            elif idx == 1:
                out.medium += 1
            else:
                out.long += 1
    return out


def metric_histogram(records: list[Record], key: str, bin_edges: list[float]) -> Histogram:
    """Histogram of one metric over the records that carry it."""
    if len(bin_edges) < 2:
        raise ValidationError("bin_edges needs at least 2 edges")
    if any(a >= b for a, b in zip(bin_edges, bin_edges[1:])):
        raise ValidationError("bin_edges must be strictly ascending")
    hist = Histogram(metric_key=key, bin_edges=list(bin_edges), counts=[0] * (len(bin_edges) - 1))
    for rec in records:
        value = getattr(rec.metrics, key, None)
        if value is None:
            value = rec.metrics.extra.get(key)
        if value is None:
            continue
        idx = _bin_value(value, bin_edges)
        if idx is None:
            if value < bin_edges[0]:
                hist.below += 1
            else:
                hist.above += 1
        else:
            hist.counts[idx] += 1
    return hist


def tag_distribution(records: list[Record]) -> list[tuple[str, int]]:
    """Tag counts over coarse captions, descending; ties break lexicographically."""
    counts: dict[str, int] = {}
    for rec in records:
        caps = rec.captions
        if caps is None or caps.coarse is None:
            continue
        for tag in caps.coarse.tags:
            counts[tag] = counts.get(tag, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def compute_stats(
    records: list[Record], histogram_specs: dict[str, list[float]] | None = None
) -> DatasetStats:
    """Duration buckets, the requested metric histograms, and tag counts."""
    specs = histogram_specs or {}
    return DatasetStats(
        duration=duration_buckets(records),
        histograms=[metric_histogram(records, key, edges) for key, edges in specs.items()],
        tags=tag_distribution(records),
    )


def default_histogram_specs() -> dict[str, list[float]]:
    """Bin layouts for the commonly plotted metrics (aesthetic width 0.1)."""
    return {
        "aesthetic": [round(3.0 + 0.1 * i, 1) for i in range(41)],  # 3.0 .. 7.0
        "dover": [round(0.01 * i, 2) for i in range(21)],  # 0 .. 0.2
        "lpips": [round(0.01 * i, 2) for i in range(31)],  # 0 .. 0.3
        "unimatch": [float(i * 5) for i in range(31)],  # 0 .. 150
        "brightness": [float(i * 10) for i in range(26)],  # 0 .. 250
        "clip_sim": [round(-1.0 + 0.05 * i, 2) for i in range(41)],  # -1 .. 1
    }


def stats_to_json(stats: DatasetStats) -> dict:
    return {
        "duration_buckets": {
            "edges": list(DURATION_EDGES),
            "short": stats.duration.short,
            "medium": stats.duration.medium,
            "long": stats.duration.long,
            "below": stats.duration.below,
            "above": stats.duration.above,
        },
        "histograms": [
            {
                "metric_key": h.metric_key,
                "bin_edges": h.bin_edges,
                "counts": h.counts,
                "below": h.below,
                "above": h.above,
            }
            for h in stats.histograms
        ],
        "tags": [[tag, count] for tag, count in stats.tags],
    }


def stats_from_json(d: dict) -> DatasetStats:
    db = d["duration_buckets"]
    return DatasetStats(
        duration=DurationBuckets(
            short=db["short"], medium=db["medium"], long=db["long"],
            below=db["below"], above=db["above"],
        ),
        histograms=[
            Histogram(
                metric_key=h["metric_key"], bin_edges=list(h["bin_edges"]),
                counts=list(h["counts"]), below=h["below"], above=h["above"],
            )
            for h in d["histograms"]
        ],
        tags=[(t, c) for t, c in d["tags"]],
    )


def emit_report(
    stats: DatasetStats, path_json: str | os.PathLike, path_csv: str | os.PathLike
) -> tuple[str, str]:
    """Write the JSON report and the per-bin CSV; both byte-deterministic.

    The CSV holds one row per bin (header ``metric_key,lo,hi,count``): the
    three duration buckets first, then each histogram's bins in order.
    """
    with open(path_json, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(stats_to_json(stats), sort_keys=True, indent=2))
        fh.write("\n")
    with open(path_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric_key", "lo", "hi", "count"])
        for (lo, hi), count in zip(
            zip(DURATION_EDGES, DURATION_EDGES[1:]),
            stats.duration.as_tuple(),
        ):
            writer.writerow(["duration_s", float(lo), float(hi), count])
        for h in stats.histograms:
            for (lo, hi), count in zip(zip(h.bin_edges, h.bin_edges[1:]), h.counts):
                writer.writerow([h.metric_key, float(lo), float(hi), count])
    return str(path_json), str(path_csv)
