"""Stage assignment for fully-scored records and per-stage manifest emission.

Stages are overlapping, not partitioned: under the default thresholds every
fine-tune record also satisfies both pre-training columns, so the video stage
sets nest (finetune within 720p within 360p). Records missing a metric that a
stage requires are excluded from that stage only, with an ``unscored``
decision, so partially scored corpora remain usable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError, ValidationError
from .filterpipe import STAGE_NAMES, StageThresholds, stage_kind
from .manifest import DecisionRecord, Interval, Record, write_manifest

STAGE_FILES = {name: f"stage_{name}.jsonl" for name in STAGE_NAMES}
SUMMARY_FILE = "stratify_summary.json"


@dataclass
class StageAssignment:
    item_id: str
    stages: set[str] = field(default_factory=set)


def _column_checks(record: Record, t: StageThresholds) -> list[tuple[str, float | None, Interval]]:
    """(metric_key, value, bound) for every check in one stage column."""
    m = record.metrics
    text = m.text_area_pct
    wm = m.watermark_area_pct
    if text is None and wm is None:
        artifact = None
    else:
        artifact = (text or 0.0) + (wm or 0.0)
    checks: list[tuple[str, float | None, Interval]] = []
    if record.kind == "video":
        if t.duration_s is not None:
            checks.append(("duration_s", record.duration_s, t.duration_s))
        if t.fps is not None:
            checks.append(("fps", record.fps, t.fps))
    checks.append(("width", record.width, Interval(lo=t.min_width)))
    checks.append(("height", record.height, Interval(lo=t.min_height)))
    checks.append(("brightness", m.brightness, t.brightness))
    if t.dover_min is not None:
        checks.append(("dover", m.dover, Interval(lo=t.dover_min)))
    if t.lpips_min is not None:
        checks.append(("lpips", m.lpips, Interval(lo=t.lpips_min)))
    if t.unimatch is not None:
        checks.append(("unimatch", m.unimatch, t.unimatch))
    checks.append(("aesthetic", m.aesthetic, Interval(lo=t.aesthetic_min)))
    checks.append(("artifact_area_pct", artifact, Interval(hi=t.text_area_pct_max)))
    checks.append(("clip_sim", m.clip_sim, Interval(lo=t.clip_sim_min)))
    return checks


def assign_stages(
    record: Record,
    thresholds: dict[str, StageThresholds],
    audit: list[DecisionRecord] | None = None,
) -> StageAssignment:
    """Stages whose complete threshold column the record satisfies.

    Images are only candidates for the image stage and videos only for the
    video stages. A stage that requires a metric the record lacks is excluded
    with an ``unscored`` decision (appended to ``audit`` when given).
    """
    assignment = StageAssignment(item_id=record.id)
    for name, t in thresholds.items():
        if t.stage != name:
            raise ValidationError(f"thresholds dict key {name!r} holds stage {t.stage!r}")
        if record.kind != stage_kind(name):
            continue
        ok = True
        for key, value, bound in _column_checks(record, t):
            if value is None:
                ok = False
                if audit is not None:
                    audit.append(
                        DecisionRecord(
                            id=f"{record.id}:stratification:{name}:{key}",
                            item_id=record.id,
                            step="stratification",
                            metric_key=f"{key}:unscored",
                            value=None,
                            threshold=bound,
                            passed=False,
                            stage=name,
                        )
                    )
                break
            if not bound.contains(value):
                ok = False
                break
        if ok:
            assignment.stages.add(name)
    return assignment


def emit_stage_manifests(
    assignments: list[StageAssignment],
    records: list[Record],
    outdir: str | os.PathLike,
) -> dict[str, int]:
    """Write one JSONL per stage (members sorted by id) plus a summary.

    All four stage files are always produced, empty when no record
    qualifies. Returns the per-stage counts.
    """
    by_id = {r.id: r for r in records}
    members: dict[str, list[Record]] = {name: [] for name in STAGE_NAMES}
    for assignment in assignments:
        rec = by_id.get(assignment.item_id)
        if rec is None:
            raise ManifestError(f"assignment references unknown record {assignment.item_id!r}")
        for name in assignment.stages:
            members[name].append(rec)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    counts = {}
    for name in STAGE_NAMES:
        records_sorted = sorted(members[name], key=lambda r: r.id)
        counts[name] = write_manifest(records_sorted, outdir / STAGE_FILES[name])
    with open(outdir / SUMMARY_FILE, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"counts": counts}, sort_keys=True, indent=2))
        fh.write("\n")
    return counts
