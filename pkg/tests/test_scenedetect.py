import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import rgb_pack, solid_rgb_frames
from vidcurate.errors import ValidationError
from vidcurate.manifest import MediaItem
from vidcurate.scenedetect import (
    SegmenterConfig,
    content_curve,
    detect_cuts,
    extract_clips,
    segment_pack,
)


def naive_cut_scan(curve, threshold, min_scene_len):
    """Reference implementation: literal scan with suppression."""
    cuts = []
    last = None
    for i in range(len(curve)):
        if curve[i] > threshold:
            if last is None or (i + 1) - last >= min_scene_len:
                cuts.append(i + 1)
                last = i + 1
    return cuts


def make_video_item(frame_count, fps=30.0, item_id="v"):
    return MediaItem(
        id=item_id, kind="video", path="v.fpk", width=640, height=368,
        fps=fps, frame_count=frame_count, duration_s=frame_count / fps,
    )


class TestContentCurve:
    def test_identical_frames_zero(self):
        arr = solid_rgb_frames([(90, 10, 200)], [2])
        np.testing.assert_array_equal(content_curve(rgb_pack(arr)), [0.0])

    def test_black_to_white_is_85(self):
        arr = solid_rgb_frames([(0, 0, 0), (255, 255, 255)], [1, 1])
        curve = content_curve(rgb_pack(arr))
        # dH = dS = 0, dV = 255, so the mean of (|dH|+|dS|+|dV|)/3 is 85.
        np.testing.assert_allclose(curve, [85.0], atol=1e-12)

    def test_static_video_all_zeros(self):
        arr = solid_rgb_frames([(1, 2, 3)], [7])
        np.testing.assert_array_equal(content_curve(rgb_pack(arr)), np.zeros(6))

    def test_single_frame_rejected(self):
        arr = solid_rgb_frames([(5, 5, 5)], [1])
        with pytest.raises(ValidationError):
            content_curve(rgb_pack(arr))

    def test_values_within_255(self):
        rng = np.random.default_rng(3)
        arr = rng.integers(0, 256, size=(6, 9, 11, 3), dtype=np.uint8)
        curve = content_curve(rgb_pack(arr))
        assert np.all(curve >= 0) and np.all(curve <= 255)


class TestDetectCuts:
    def test_single_spike(self):
        cuts = detect_cuts([0, 0, 50, 0, 0], SegmenterConfig(cut_threshold=27, min_scene_len=1))
        assert cuts == [3]

    def test_flat_curve_no_cuts(self):
        assert detect_cuts([0.0] * 50, SegmenterConfig()) == []

    def test_suppression_keeps_first(self):
        # Spikes at curve indices 2 and 4 propose cuts at 3 and 5; with a
        # minimum scene length of 5 only the first survives.
        curve = [0, 0, 90, 0, 90, 0]
        cuts = detect_cuts(curve, SegmenterConfig(cut_threshold=27, min_scene_len=5))
        assert cuts == [3]

    def test_threshold_is_exclusive(self):
        assert detect_cuts([27.0], SegmenterConfig(cut_threshold=27.0, min_scene_len=1)) == []

    @settings(max_examples=120, deadline=None)
    @given(
        curve=st.lists(st.floats(0, 100, allow_nan=False), max_size=200),
        threshold=st.floats(1, 99),
        msl=st.integers(1, 30),
    )
    def test_matches_naive_scan(self, curve, threshold, msl):
        config = SegmenterConfig(cut_threshold=threshold, min_scene_len=msl)
        assert detect_cuts(curve, config) == naive_cut_scan(curve, threshold, msl)

    def test_matches_naive_scan_long_random(self):
        rng = np.random.default_rng(11)
        curve = rng.uniform(0, 60, size=10_000)
        config = SegmenterConfig(cut_threshold=27.0, min_scene_len=15)
        assert detect_cuts(curve, config) == naive_cut_scan(curve, 27.0, 15)

    @settings(max_examples=100, deadline=None)
    @given(
        curve=st.lists(st.floats(0, 100, allow_nan=False), max_size=120),
        lo=st.floats(1, 98),
        delta=st.floats(0.1, 50),
        msl=st.integers(1, 20),
    )
    def test_raising_threshold_never_adds_cuts(self, curve, lo, delta, msl):
        config_lo = SegmenterConfig(cut_threshold=lo, min_scene_len=msl)
        config_hi = SegmenterConfig(cut_threshold=lo + delta, min_scene_len=msl)
        assert len(detect_cuts(curve, config_hi)) <= len(detect_cuts(curve, config_lo))


class TestExtractClips:
    def test_no_cuts_trims_and_keeps(self):
        parent = make_video_item(300)
        clips = extract_clips(parent, [], SegmenterConfig())
        assert len(clips) == 1
        clip = clips[0]
        assert clip.span == (10, 290)
        assert clip.duration_s == pytest.approx(280 / 30)
        assert clip.parent_id == parent.id and clip.source_fps == 30.0

    def test_short_scene_dropped(self):
        # 70 frames trim to 50 = 1.667 s, under the 2 s floor.
        parent = make_video_item(70)
        assert extract_clips(parent, [], SegmenterConfig()) == []

    def test_long_scene_dropped(self):
        # 520 frames trim to 500 = 16.667 s, over the 16 s ceiling.
        parent = make_video_item(520)
        assert extract_clips(parent, [], SegmenterConfig()) == []

    def test_boundary_durations_inclusive(self):
        # Trimmed lengths of exactly 60 and 480 frames sit on the closed bounds.
        for frames in (80, 500):
            parent = make_video_item(frames)
            clips = extract_clips(parent, [], SegmenterConfig())
            assert len(clips) == 1

    def test_cuts_partition_and_order(self):
        parent = make_video_item(600)
        clips = extract_clips(parent, [200, 400], SegmenterConfig())
        spans = [c.span for c in clips]
        assert spans == [(10, 190), (210, 390), (410, 590)]
        for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
            assert b0 <= a1  # pairwise non-overlapping, ordered
        assert all(c.id == f"v__c{str(i).zfill(3)}" for i, c in enumerate(clips))

    def test_invalid_cuts_rejected(self):
        parent = make_video_item(100)
        with pytest.raises(ValidationError):
            extract_clips(parent, [50, 50], SegmenterConfig())
        with pytest.raises(ValidationError):
            extract_clips(parent, [100], SegmenterConfig())


class TestSegmentPack:
    def test_hard_cuts_recovered_exactly(self):
        lengths = [90, 120, 150]
        colors = [(10, 10, 10), (250, 250, 250), (200, 30, 30)]
        arr = solid_rgb_frames(colors, lengths)
        parent = make_video_item(sum(lengths))
        cuts, clips = segment_pack(parent, rgb_pack(arr), SegmenterConfig())
        assert cuts == [90, 210]
        assert [c.span for c in clips] == [(10, 80), (100, 200), (220, 350)]
        for clip in clips:
            assert 2.0 <= clip.duration_s <= 16.0

    def test_frame_count_mismatch_rejected(self):
        arr = solid_rgb_frames([(1, 1, 1)], [5])
        parent = make_video_item(99)
        with pytest.raises(ValidationError, match="99"):
            segment_pack(parent, rgb_pack(arr), SegmenterConfig())
