import csv
import json
import random

import pytest

from helpers import straddling_corpus
from vidcurate.errors import ValidationError
from vidcurate.manifest import CaptionSet, CoarseCaption, MediaItem, MetricVector
from vidcurate.stats import (
    compute_stats,
    duration_buckets,
    emit_report,
    metric_histogram,
    stats_from_json,
    stats_to_json,
    tag_distribution,
)


def video_with_duration(d, item_id):
    frames = int(round(d * 30))
    return MediaItem(
        id=item_id, kind="video", path="x.fpk", width=640, height=368,
        fps=30.0, frame_count=frames, duration_s=frames / 30.0,
    )


def image_with(metrics=None, tags=None, item_id="i"):
    return MediaItem(
        id=item_id, kind="image", path="x.fpk", width=640, height=368,
        metrics=metrics if metrics is not None else MetricVector(),
        captions=CaptionSet(coarse=CoarseCaption(tags=tags or [], text="")) if tags is not None else None,
    )


class TestDurationBuckets:
    def test_hand_binned_boundaries(self):
        records = [video_with_duration(d, f"v{i}") for i, d in enumerate([3, 6, 10, 16])]
        out = duration_buckets(records)
        assert out.as_tuple() == (1, 1, 2)

    def test_empty(self):
        assert duration_buckets([]).as_tuple() == (0, 0, 0)

    def test_six_goes_to_medium(self):
        out = duration_buckets([video_with_duration(6.0, "v")])
        assert out.as_tuple() == (0, 1, 0)

    def test_out_of_range_tallied_separately(self):
        records = [video_with_duration(d, f"v{i}") for i, d in enumerate([1.0, 17.0, 8.0])]
        out = duration_buckets(records)
        assert (out.below, out.above) == (1, 1)
        assert out.as_tuple() == (0, 1, 0)

    def test_images_ignored(self):
        assert duration_buckets([image_with()]).as_tuple() == (0, 0, 0)


class TestMetricHistogram:
    def test_hand_binned(self):
        records = [
            MediaItem(id=f"i{k}", kind="image", path="x", width=1, height=1,
                      metrics=MetricVector(aesthetic=v))
            for k, v in enumerate([4.8, 5.0, 5.3])
        ]
        hist = metric_histogram(records, "aesthetic", [4.5, 5.0, 5.5])
        assert hist.counts == [1, 2]
        assert (hist.below, hist.above) == (0, 0)

    def test_all_below(self):
        records = [
            MediaItem(id=f"i{k}", kind="image", path="x", width=1, height=1,
                      metrics=MetricVector(aesthetic=1.0))
            for k in range(4)
        ]
        hist = metric_histogram(records, "aesthetic", [4.5, 5.0])
        assert hist.counts == [0] and hist.below == 4 and hist.above == 0

    def test_last_bin_closed(self):
        records = [MediaItem(id="i", kind="image", path="x", width=1, height=1,
                             metrics=MetricVector(aesthetic=5.5))]
        hist = metric_histogram(records, "aesthetic", [4.5, 5.0, 5.5])
        assert hist.counts == [0, 1] and hist.above == 0

    def test_conservation_on_random_data(self):
        records, _ = straddling_corpus(300, seed=21)
        rng = random.Random(0)
        for key in ("aesthetic", "dover", "clip_sim", "brightness"):
            edges = sorted(rng.sample(range(-2, 200), 5))
            edges = [float(e) for e in edges]
            hist = metric_histogram(records, key, edges)
            population = sum(
                1 for r in records if getattr(r.metrics, key, None) is not None
            )
            assert hist.population == population

    def test_bad_edges(self):
        with pytest.raises(ValidationError):
            metric_histogram([], "aesthetic", [1.0])
        with pytest.raises(ValidationError):
            metric_histogram([], "aesthetic", [1.0, 1.0])


class TestTagDistribution:
    def test_counts_and_order(self):
        records = [
            image_with(tags=["person"], item_id="a"),
            image_with(tags=["person", "food"], item_id="b"),
        ]
        assert tag_distribution(records) == [("person", 2), ("food", 1)]

    def test_empty(self):
        assert tag_distribution([]) == []

    def test_tie_breaks_lexicographically(self):
        records = [image_with(tags=["b", "a"], item_id="x")]
        assert tag_distribution(records) == [("a", 1), ("b", 1)]


class TestReport:
    def _stats(self):
        records, _ = straddling_corpus(120, seed=31)
        return compute_stats(records, {"aesthetic": [4.5, 5.0, 5.5, 6.0]})

    def test_identical_inputs_identical_files(self, tmp_path):
        stats = self._stats()
        emit_report(stats, tmp_path / "a.json", tmp_path / "a.csv")
        emit_report(stats, tmp_path / "b.json", tmp_path / "b.csv")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_csv_row_count_is_total_bins(self, tmp_path):
        stats = self._stats()
        emit_report(stats, tmp_path / "r.json", tmp_path / "r.csv")
        with open(tmp_path / "r.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        expected_bins = 3 + sum(len(h.counts) for h in stats.histograms)
        assert len(rows) == 1 + expected_bins  # header + bins
        assert rows[0] == ["metric_key", "lo", "hi", "count"]

    def test_json_round_trips_to_stats(self, tmp_path):
        stats = self._stats()
        emit_report(stats, tmp_path / "r.json", tmp_path / "r.csv")
        loaded = stats_from_json(json.loads((tmp_path / "r.json").read_text()))
        assert stats_to_json(loaded) == stats_to_json(stats)
