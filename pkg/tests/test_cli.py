import json

import pytest

from helpers import straddling_corpus, write_image_item, write_video_item, solid_rgb_frames
from vidcurate.cli import main
from vidcurate.config import load_config
from vidcurate.errors import ConfigError
from vidcurate.manifest import load_manifest, write_manifest


class TestConfig:
    def test_defaults_without_file(self):
        cfg = load_config(None)
        fine = cfg.stages["t2v_finetune"]
        assert fine.dover_min == 0.07 and fine.aesthetic_min == 5.3

    def test_partial_override_deep_merges(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"stages": {"t2v_finetune": {"aesthetic_min": 5.5}}}))
        cfg = load_config(path)
        assert cfg.stages["t2v_finetune"].aesthetic_min == 5.5
        # everything else stays at defaults
        assert cfg.stages["t2v_finetune"].dover_min == 0.07
        assert cfg.stages["t2v_pretrain_360p"].aesthetic_min == 4.8
        assert cfg.workers == 1

    def test_negative_workers_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"workers": -1}))
        with pytest.raises(ConfigError, match="workers"):
            load_config(path)

    def test_malformed_json_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_env_var_supplies_path(self, tmp_path, monkeypatch):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"workers": 4}))
        monkeypatch.setenv("VIDCURATE_CONFIG", str(path))
        assert load_config(None).workers == 4

    def test_serialized_defaults_are_a_fixed_point(self, tmp_path):
        cfg = load_config(None)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_json()))
        again = load_config(path)
        assert again.to_json() == cfg.to_json()


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, capsys):
        assert main(["geom", "shape", "--frames", "88", "--nope"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_missing_manifest_is_io_error(self, tmp_path):
        assert main(["stats", "--in", str(tmp_path / "none.jsonl"),
                     "--out-json", str(tmp_path / "r.json"),
                     "--out-csv", str(tmp_path / "r.csv")]) == 2

    def test_bad_config_is_validation_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"workers": 0}))
        assert main(["--config", str(cfg), "geom", "shape",
                     "--frames", "88", "--width", "1280", "--height", "720"]) == 4

    def test_scorer_error_exit_code(self, tmp_path):
        records, _ = straddling_corpus(3, seed=1)
        for rec in records:
            rec.metrics.aesthetic = None  # force a scorer request
        manifest = tmp_path / "m.jsonl"
        write_manifest(records, manifest)
        code = main([
            "score", "--in", str(manifest), "--out", str(tmp_path / "out.jsonl"),
            "--tasks", "aesthetic", "--endpoint", "http://127.0.0.1:1",
            "--media-root", str(tmp_path), "--workdir", str(tmp_path / "w"),
        ])
        assert code == 3

    def test_validation_exit_on_invalid_geometry(self):
        assert main(["geom", "shape", "--frames", "90", "--width", "1280", "--height", "720"]) == 4


class TestGeomCommands:
    def test_shape_prints_published_constants(self, capsys):
        assert main(["geom", "shape", "--frames", "88", "--width", "1280", "--height", "720"]) == 0
        out = capsys.readouterr().out.strip()
        assert out == '{"t":22,"c":4,"h":90,"w":160}'

    def test_tiles_decoder_spans(self, capsys):
        assert main([
            "geom", "tiles", "--frames", "22", "--height", "90", "--width", "160",
            "--side", "decoder", "--preset", "720p",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["axes"][1] == [[0, 40], [30, 70], [50, 90]]

    def test_check_reports_ok(self, capsys):
        assert main([
            "geom", "check", "--duration", "6.0", "--width", "1280", "--height", "720",
            "--stage", "t2v_finetune",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["ok"] is True

    def test_check_reports_reasons(self, capsys):
        assert main([
            "geom", "check", "--duration", "5.0", "--width", "1280", "--height", "720",
            "--stage", "t2v_finetune",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["ok"] is False and payload["reasons"]


class TestPipelineCommands:
    def test_filter_matches_oracle_counts(self, tmp_path, capsys, mock_scorer):
        from helpers import oracle_stage_ok

        records, samples = straddling_corpus(30, seed=55)
        manifest = tmp_path / "scored.jsonl"
        write_manifest(records, manifest)
        code = main([
            "filter", "--stage", "t2v_finetune", "--in", str(manifest),
            "--out", str(tmp_path / "kept.jsonl"),
            "--dropped", str(tmp_path / "dropped.jsonl"),
            "--decisions", str(tmp_path / "d.jsonl"),
            "--summary", str(tmp_path / "s.json"),
            "--no-segment", "--media-root", str(tmp_path),
            "--workdir", str(tmp_path / "work"),
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        want = sum(1 for s in samples if oracle_stage_ok(s, "t2v_finetune"))
        assert summary["kept"] == want
        kept = load_manifest(tmp_path / "kept.jsonl")
        assert len(kept) == want

    def test_segment_subcommand(self, tmp_path, capsys):
        arr = solid_rgb_frames([(10, 10, 10), (240, 240, 240)], [150, 150])
        item = write_video_item(tmp_path, "vid", arr)
        manifest = tmp_path / "items.jsonl"
        write_manifest([item], manifest)
        code = main([
            "segment", "--in", str(manifest), "--media-root", str(tmp_path),
            "--out", str(tmp_path / "clips.jsonl"),
        ])
        assert code == 0
        clips = load_manifest(tmp_path / "clips.jsonl")
        assert [c.span for c in clips] == [(10, 140), (160, 290)]

    def test_ingest_raw_and_stats(self, tmp_path, capsys):
        raw = tmp_path / "frames.rgb"
        raw.write_bytes(bytes(2 * 3 * 4 * 3))  # 2 frames of 4x3 RGB
        code = main([
            "ingest", "--raw", str(raw), "--width", "4", "--height", "3",
            "--fps", "30", "--out", str(tmp_path / "p.fpk"),
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["frames"] == 2

    def test_stratify_and_stats_commands(self, tmp_path, capsys):
        records, _ = straddling_corpus(40, seed=56)
        manifest = tmp_path / "m.jsonl"
        write_manifest(records, manifest)
        assert main(["stratify", "--in", str(manifest), "--outdir", str(tmp_path / "stages")]) == 0
        capsys.readouterr()
        assert main([
            "stats", "--in", str(manifest),
            "--out-json", str(tmp_path / "r.json"), "--out-csv", str(tmp_path / "r.csv"),
        ]) == 0
        report = json.loads((tmp_path / "r.json").read_text())
        assert "duration_buckets" in report

    def test_score_fills_metrics_via_mock(self, tmp_path, mock_scorer, capsys):
        item = write_image_item(tmp_path, "img")
        item.metrics.aesthetic = None
        manifest = tmp_path / "m.jsonl"
        write_manifest([item], manifest)
        code = main([
            "score", "--in", str(manifest), "--out", str(tmp_path / "scored.jsonl"),
            "--tasks", "aesthetic,text_area", "--endpoint", mock_scorer.url,
            "--media-root", str(tmp_path), "--workdir", str(tmp_path / "w"),
        ])
        assert code == 0
        scored = load_manifest(tmp_path / "scored.jsonl")[0]
        assert scored.metrics.aesthetic is not None
        assert scored.metrics.text_area_pct is not None


class TestBuiltinScoring:
    def test_builtin_proxies_computed_in_process(self, tmp_path, capsys):
        arr = solid_rgb_frames([(40, 40, 40), (200, 200, 200)], [3, 3])
        item = write_video_item(tmp_path, "vid", arr)
        manifest = tmp_path / "m.jsonl"
        write_manifest([item], manifest)
        code = main([
            "score", "--in", str(manifest), "--out", str(tmp_path / "scored.jsonl"),
            "--tasks", "motion_proxy,consistency_proxy,brightness",
            "--media-root", str(tmp_path), "--workdir", str(tmp_path / "w"),
        ])
        assert code == 0
        scored = load_manifest(tmp_path / "scored.jsonl")[0]
        assert scored.metrics.motion_proxy is not None
        assert 0.0 <= scored.metrics.consistency_proxy <= 1.0
        assert scored.metrics.brightness is not None
        # no endpoint was needed for built-ins
        assert json.loads(capsys.readouterr().out)["requests"] == 0


class TestThresholdOverrides:
    def test_override_tightens_kept_set(self, tmp_path, capsys):
        records, _ = straddling_corpus(30, seed=58)
        manifest = tmp_path / "m.jsonl"
        write_manifest(records, manifest)

        def run(extra):
            code = main([
                "filter", "--stage", "t2v_pretrain_360p", "--in", str(manifest),
                "--out", str(tmp_path / "kept.jsonl"), "--no-segment",
                "--media-root", str(tmp_path), "--workdir", str(tmp_path / "w"),
                *extra,
            ])
            assert code == 0
            return json.loads(capsys.readouterr().out)["kept"]

        base = run([])
        tightened = run(["--override", "aesthetic_min=6.5"])
        assert tightened <= base
        interval = run(["--override", "duration_lo=10"])
        assert interval <= base

    def test_bad_override_is_validation_error(self, tmp_path):
        records, _ = straddling_corpus(2, seed=59)
        manifest = tmp_path / "m.jsonl"
        write_manifest(records, manifest)
        assert main([
            "filter", "--stage", "t2v_pretrain_360p", "--in", str(manifest),
            "--out", str(tmp_path / "kept.jsonl"), "--no-segment",
            "--override", "nonsense=1",
        ]) == 4
