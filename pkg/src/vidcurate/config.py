"""Run configuration: JSON file with deep-merge over the built-in defaults.

The default stage thresholds reproduce the published per-stage filter table;
a config file only needs the fields it overrides. The path can come from the
``VIDCURATE_CONFIG`` environment variable when not passed explicitly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .filterpipe import STAGE_NAMES, StageThresholds, default_stage_thresholds
from .geometry import GeometryConfig
from .scenedetect import SegmenterConfig

ENV_CONFIG = "VIDCURATE_CONFIG"


@dataclass
class ScorerConfig:
    endpoint: str | None = None
    endpoints: dict[str, str] = field(default_factory=dict)  # per-task overrides
    retries: int = 2
    backoff_ms: int = 50
    timeout_ms: int = 10000
    mock_seed: int = 0

    def to_json(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "endpoints": dict(self.endpoints),
            "retries": self.retries,
            "backoff_ms": self.backoff_ms,
            "timeout_ms": self.timeout_ms,
            "mock_seed": self.mock_seed,
        }


@dataclass
class RunConfig:
    stages: dict[str, StageThresholds] = field(default_factory=default_stage_thresholds)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    workers: int = 1
    skip_on_scorer_error: bool = False

    def validate(self) -> list[str]:
        problems = []
        if set(self.stages) != set(STAGE_NAMES):
            problems.append(f"stages must be exactly {STAGE_NAMES}")
        for name, t in self.stages.items():
            problems.extend(f"stages.{name}: {p}" for p in t.validate())
        problems.extend(f"segmenter: {v}" for v in map(str, self.segmenter.validate()))
        problems.extend(f"geometry: {p}" for p in self.geometry.validate())
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if self.scorer.retries < 0:
            problems.append("scorer.retries must be >= 0")
        if self.scorer.backoff_ms < 0 or self.scorer.timeout_ms <= 0:
            problems.append("scorer backoff/timeout must be non-negative/positive")
        return problems

    def to_json(self) -> dict:
        return {
            "stages": {name: t.to_json() for name, t in sorted(self.stages.items())},
            "scorer": self.scorer.to_json(),
            "segmenter": {
                "cut_threshold": self.segmenter.cut_threshold,
                "min_scene_len": self.segmenter.min_scene_len,
                "trim_frames": self.segmenter.trim_frames,
                "keep_duration_s": list(self.segmenter.keep_duration_s),
            },
            "geometry": self.geometry.to_json(),
            "workers": self.workers,
            "skip_on_scorer_error": self.skip_on_scorer_error,
        }


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _config_from_json(d: dict) -> RunConfig:
    cfg = RunConfig()
    merged = _deep_merge(cfg.to_json(), d)
    try:
        stages = {
            name: StageThresholds.from_json({"stage": name, **body})
            for name, body in merged["stages"].items()
        }
        sc = merged["scorer"]
        seg = merged["segmenter"]
        return RunConfig(
            stages=stages,
            scorer=ScorerConfig(
                endpoint=sc.get("endpoint"),
                endpoints=dict(sc.get("endpoints", {})),
                retries=sc["retries"],
                backoff_ms=sc["backoff_ms"],
                timeout_ms=sc["timeout_ms"],
                mock_seed=sc.get("mock_seed", 0),
            ),
            segmenter=SegmenterConfig(
                cut_threshold=seg["cut_threshold"],
                min_scene_len=seg["min_scene_len"],
                trim_frames=seg["trim_frames"],
                keep_duration_s=tuple(seg["keep_duration_s"]),
            ),
            geometry=GeometryConfig.from_json(merged["geometry"]),
            workers=merged["workers"],
            skip_on_scorer_error=merged["skip_on_scorer_error"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config structure: {exc}") from exc


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Load a config file, deep-merged over defaults; no file means defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        cfg = RunConfig()
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        cfg = _config_from_json(data)
    problems = cfg.validate()
    if problems:
        raise ConfigError("invalid config: " + "; ".join(problems))
    return cfg
