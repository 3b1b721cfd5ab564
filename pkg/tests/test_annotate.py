import pytest

from vidcurate.annotate import (
    CameraMotion,
    assemble_caption_set,
    build_fine_instruction,
    extract_camera_motion,
)
from vidcurate.errors import ValidationError
from vidcurate.manifest import CoarseCaption


class TestCameraMotion:
    def test_single_pattern(self):
        out = extract_camera_motion("Camera pans left. A dog runs.")
        assert out == [CameraMotion("pans left", 0)]

    def test_no_pattern(self):
        assert extract_camera_motion("A dog runs.") == []

    def test_two_patterns_in_order(self):
        out = extract_camera_motion("Camera zooms in. Camera tilts up.")
        assert out == [CameraMotion("zooms in", 0), CameraMotion("tilts up", 1)]

    def test_sentence_index_counts_non_camera_sentences(self):
        out = extract_camera_motion("A dog runs! Camera pans right? The end.")
        assert out == [CameraMotion("pans right", 1)]

    def test_case_sensitive_literal(self):
        assert extract_camera_motion("camera pans left.") == []
        assert extract_camera_motion("CameraX pans.") == []

    def test_reconstruction_round_trip(self):
        caption = "Intro here. Camera dollies forward. Camera tilts up. Outro."
        sentences = [s.strip() for s in caption.split(".") if s.strip()]
        for motion in extract_camera_motion(caption):
            assert f"Camera {motion.pattern}" == sentences[motion.sentence_index]

    def test_bare_camera_word_ignored(self):
        assert extract_camera_motion("Camera. Camera .") == []


class TestFineInstruction:
    def test_deterministic(self):
        coarse = CoarseCaption(tags=["person", "food"], text="a man cooking")
        assert build_fine_instruction(coarse, "video") == build_fine_instruction(coarse, "video")

    def test_contains_coarse_text_verbatim(self):
        coarse = CoarseCaption(tags=[], text="a man cooking")
        assert "a man cooking" in build_fine_instruction(coarse, "image")

    def test_temporal_clause_only_for_video(self):
        coarse = CoarseCaption(tags=["x"], text="t")
        video = build_fine_instruction(coarse, "video")
        image = build_fine_instruction(coarse, "image")
        assert "over the course of the video" in video
        assert "over the course of the video" not in image

    def test_coverage_terms_present(self):
        text = build_fine_instruction(CoarseCaption([], "t"), "video")
        for term in ("subjects", "interactions", "background", "environment",
                     "style", "atmosphere", "camera"):
            assert term in text

    def test_bad_kind(self):
        with pytest.raises(ValidationError):
            build_fine_instruction(CoarseCaption([], "t"), "gif")


class TestAssembleCaptionSet:
    def test_image_set(self):
        out = assemble_caption_set("image", CoarseCaption(["a"], "a"), "Fine text.")
        assert out.camera_motions == []
        assert out.mid_frame_coarse is None and out.mid_frame_fine is None

    def test_image_fine_caption_with_camera_sentence(self):
        out = assemble_caption_set("image", CoarseCaption([], "a"), "Camera tilts down.")
        assert out.camera_motions == ["tilts down"]

    def test_video_with_all_slots(self):
        out = assemble_caption_set(
            "video",
            CoarseCaption(["b"], "b"),
            "Stuff happens. Camera pans left.",
            mid_coarse=CoarseCaption(["b"], "mid"),
            mid_fine="Mid fine.",
        )
        assert out.camera_motions == ["pans left"]
        assert out.mid_frame_coarse.text == "mid"

    def test_image_with_mid_slot_rejected(self):
        with pytest.raises(ValidationError):
            assemble_caption_set("image", CoarseCaption([], "a"), "f", mid_fine="x")

    def test_video_missing_mid_when_required(self):
        with pytest.raises(ValidationError):
            assemble_caption_set("video", CoarseCaption([], "a"), "f", require_mid=True)
