"""Annotation files: schema, loading, validation and attribute buckets."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

from .canonical import TASKS, intervals_from_json, read_jsonl, segments_from_json, tube_from_json
from .core import IntervalSet, Tube
from .errors import SchemaError
from .plot_track import McItem

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

VIDEO_LENGTH_BUCKETS = {
    # (upper bound in seconds, label); lower-inclusive, upper-exclusive
    "tr": ((60, "ultra-short"), (600, "short"), (1800, "medium"), (3600, "long"), (None, "ultra-long")),
    "stg": ((60, "ultra-short"), (600, "short"), (None, "medium")),
    "plot": ((90, "<90s"), (150, "90-150s"), (210, "150-210s"), (None, ">210s")),
}
TUBE_DURATION_BUCKETS = ((3, "micro-short"), (10, "ultra-short"), (None, "short"))
OBJECT_SIZE_BUCKETS = {
    "stg": ((0.10, "small"), (0.30, "medium"), (None, "large")),
    "plot": ((0.05, "small"), (0.20, "medium"), (None, "large")),
}
STG_MAX_DURATION_S = 1800
MAX_TUBE_S = 60

GroundTruth = Union[Tube, IntervalSet, list, McItem]


def _bucket(value: float, table) -> str:
    for hi, label in table:
        if hi is None or value < hi:
            return label
    raise AssertionError("unreachable")


def bucket_labels(table) -> tuple[str, ...]:
    return tuple(label for _, label in table)


def bucket_video_duration(duration_s: float, benchmark: str = "tr") -> str:
    if duration_s <= 0:
        raise ValueError("video duration must be positive")
    if benchmark == "stg" and duration_s >= STG_MAX_DURATION_S:
        log.warning("STG video of %.0fs exceeds the 30 min range; bucketed as medium", duration_s)
    return _bucket(duration_s, VIDEO_LENGTH_BUCKETS[benchmark])


def bucket_tube_duration(n_gt_seconds: int) -> str:
    if n_gt_seconds < 1:
        raise ValueError("tube duration needs at least one annotated second")
    if n_gt_seconds > MAX_TUBE_S:
        log.warning("tube of %ds is longer than 60s; bucketed as short", n_gt_seconds)
    return _bucket(n_gt_seconds, TUBE_DURATION_BUCKETS)


def bucket_object_size(tube: Tube, benchmark: str = "stg") -> str:
    """Bucket by the mean normalized box area over the tube's frames."""
    return _bucket(tube.mean_area(), OBJECT_SIZE_BUCKETS[benchmark])


@dataclass(frozen=True)
class QueryAnnotation:
    query_id: str
    video_id: str
    duration_s: float
    task: str
    query: str
    gt: Any
    modality: str = ""
    format: str = ""
    line: int | None = field(default=None, compare=False)

    def slices(self) -> tuple[tuple[str, str], ...]:
        """Attribute buckets this query belongs to."""
        if self.task == "stg":
            return (
                ("video_length", bucket_video_duration(self.duration_s, "stg")),
                ("tube_duration", bucket_tube_duration(len(self.gt))),
                ("object_size", bucket_object_size(self.gt, "stg")),
            )
        if self.task == "tr":
            out = [("video_length", bucket_video_duration(self.duration_s, "tr"))]
            if self.format:
                out.append(("query_format", self.format))
            if self.modality:
                out.append(("modality", self.modality))
            return tuple(out)
        if self.task == "char":
            out = [("video_length", bucket_video_duration(self.duration_s, "plot"))]
            boxes = [b for seg in self.gt for _, b in seg.boxes]
            if boxes:
                out.append(("object_size", bucket_object_size(Tube.from_mapping(dict(enumerate(boxes))), "plot")))
            return tuple(out)
        out = [("video_length", bucket_video_duration(self.duration_s, "plot"))]
        if self.gt.task_type:
            out.append(("task_type", self.gt.task_type))
        return tuple(out)


def _str_field(rec: dict, key: str, lineno: int, required: bool = True) -> str:
    if key not in rec:
        if required:
            raise SchemaError(f"missing field {key!r}", lineno)
        return ""
    v = rec[key]
    if not isinstance(v, str):
        raise SchemaError(f"field {key!r} must be a string", lineno)
    return v


def _parse_gt(task: str, gt: Any, query_id: str, lineno: int) -> GroundTruth:
    if not isinstance(gt, dict):
        raise SchemaError("field 'gt' must be an object", lineno)
    try:
        if task == "stg":
            fps = gt.get("fps", 1)
            if fps != 1:
                raise SchemaError(f"non-1Hz tube (fps={fps})")
            return tube_from_json(gt["tube"])
        if task == "tr":
            return intervals_from_json(gt["intervals"])
        if task == "char":
            return segments_from_json(gt["segments"])
        options = gt["options"]
        if not isinstance(options, list) or not options or not all(isinstance(o, str) for o in options):
            raise SchemaError("mc options must be a non-empty list of strings")
        answer = gt["answer"]
        if isinstance(answer, bool) or not isinstance(answer, int):
            raise SchemaError("mc answer must be an option index")
        task_type = gt.get("task_type")
        try:
            return McItem(query_id, tuple(options), answer, None, task_type)
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
    except KeyError as exc:
        raise SchemaError(f"gt for task {task!r} lacks {exc.args[0]!r}", lineno) from None
    except SchemaError as exc:
        if exc.line is None:
            raise SchemaError(str(exc), lineno) from None
        raise


def parse_annotation(rec: dict, lineno: int = 0) -> QueryAnnotation:
    v = rec.get("v")
    if v != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {v!r} (expected {SCHEMA_VERSION})", lineno)
    query_id = _str_field(rec, "query_id", lineno)
    task = _str_field(rec, "task", lineno)
    if task not in TASKS:
        raise SchemaError(f"unknown task {task!r}", lineno)
    duration = rec.get("duration_s")
    if isinstance(duration, bool) or not isinstance(duration, (int, float)) or not duration > 0:
        raise SchemaError("duration_s must be a positive number", lineno)
    if "gt" not in rec:
        raise SchemaError("missing field 'gt'", lineno)
    return QueryAnnotation(
        query_id=query_id,
        video_id=_str_field(rec, "video_id", lineno),
        duration_s=float(duration),
        task=task,
        query=_str_field(rec, "query", lineno, required=False),
        gt=_parse_gt(task, rec["gt"], query_id, lineno),
        modality=_str_field(rec, "modality", lineno, required=False),
        format=_str_field(rec, "format", lineno, required=False),
        line=lineno,
    )


def load_annotations(path: str | Path) -> list[QueryAnnotation]:
    """Read a JSON-lines annotation file; raises SchemaError with the line number."""
    out: list[QueryAnnotation] = []
    seen: dict[str, int] = {}
    for lineno, rec in read_jsonl(path):
        ann = parse_annotation(rec, lineno)
        if ann.query_id in seen:
            raise SchemaError(
                f"duplicate query_id {ann.query_id!r} (first seen on line {seen[ann.query_id]})", lineno
            )
        seen[ann.query_id] = lineno
        out.append(ann)
    return out


def annotation_to_json(ann: QueryAnnotation) -> dict:
    from .canonical import intervals_to_json, segments_to_json, tube_to_json

    if ann.task == "stg":
        gt: dict = {"tube": tube_to_json(ann.gt)}
    elif ann.task == "tr":
        gt = {"intervals": intervals_to_json(ann.gt)}
    elif ann.task == "char":
        gt = {"segments": segments_to_json(ann.gt)}
    else:
        gt = {"options": list(ann.gt.options), "answer": ann.gt.gt_answer}
        if ann.gt.task_type:
            gt["task_type"] = ann.gt.task_type
    return {
        "v": SCHEMA_VERSION,
        "query_id": ann.query_id,
        "video_id": ann.video_id,
        "duration_s": ann.duration_s,
        "task": ann.task,
        "query": ann.query,
        "modality": ann.modality,
        "format": ann.format,
        "gt": gt,
    }


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    # task -> dimension -> bucket -> count
    buckets: dict[str, dict[str, Counter]] = field(default_factory=dict)
    n_queries: int = 0

    @property
    def ok(self) -> bool:
        return not self.errors


def _uniform_sparse(ts: tuple[int, ...]) -> bool:
    if len(ts) < 3:
        return False
    gaps = {b - a for a, b in zip(ts, ts[1:])}
    return len(gaps) == 1 and gaps.pop() > 1


def validate(annotations: list[QueryAnnotation]) -> ValidationReport:
    """Check semantic invariants and count queries per bucket.

    A tube sampled on a regular grid coarser than 1 s (e.g. every 2 s) is
    reported as "non-1Hz tube"; irregular gaps are legal fragmentation.
    """
    rep = ValidationReport(n_queries=len(annotations))
    seen: set[str] = set()
    for ann in annotations:
        where = f"{ann.query_id}" + (f" (line {ann.line})" if ann.line else "")
        if ann.query_id in seen:
            rep.errors.append(f"{where}: duplicate query_id")
        seen.add(ann.query_id)
        try:
            if ann.task == "stg":
                if ann.gt.is_empty:
                    rep.errors.append(f"{where}: empty tube")
                    continue
                if _uniform_sparse(ann.gt.support.timestamps):
                    rep.errors.append(f"{where}: non-1Hz tube")
                if ann.gt.support.timestamps[-1] > ann.duration_s + 1:
                    rep.errors.append(f"{where}: tube extends past the video end")
                if ann.duration_s >= STG_MAX_DURATION_S:
                    rep.warnings.append(f"{where}: video longer than 30 min")
                if len(ann.gt) > MAX_TUBE_S:
                    rep.warnings.append(f"{where}: tube longer than 60 s")
            elif ann.task == "tr":
                if ann.gt.is_empty:
                    rep.errors.append(f"{where}: empty interval set")
                    continue
                if ann.gt.intervals[-1][1] > ann.duration_s + 1:
                    rep.errors.append(f"{where}: interval extends past the video end")
            elif ann.task == "char" and not ann.gt:
                rep.errors.append(f"{where}: no transcript segments")
                continue
            for dim, bucket in ann.slices():
                rep.buckets.setdefault(ann.task, {}).setdefault(dim, Counter())[bucket] += 1
        except ValueError as exc:
            rep.errors.append(f"{where}: {exc}")
    return rep
