"""Score a prediction file against an annotation file."""

from __future__ import annotations

import hashlib
import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import adapters
from .adapters import DIALECTS, FrameSamplingPolicy, ParseLog
from .canonical import (
    PREDICTION_KEYS,
    intervals_from_json,
    read_jsonl,
    segments_from_json,
    tube_from_json,
)
from .core import IntervalSet, ScoreRecord, normalize_intervals
from .dataset import QueryAnnotation, load_annotations
from .errors import DialectParseError, InputError, SchemaError
from .plot_track import McItem, aggregate_char, aggregate_mc, score_char, score_mc
from .report import RunReport, fill_buckets
from .stg import aggregate_stg, merge_tubes, score_stg
from .tr import aggregate_tr, curves_for, score_tr

log = logging.getLogger(__name__)

WORKERS_ENV = "STGEVAL_WORKERS"
AGGREGATORS = {"stg": aggregate_stg, "tr": aggregate_tr, "char": aggregate_char, "mc": aggregate_mc}


@dataclass(frozen=True)
class WorkItem:
    task: str
    ann: QueryAnnotation
    preds: tuple[dict, ...]
    dialect: str | None


@dataclass(frozen=True)
class Outcome:
    record: ScoreRecord
    counts: dict[str, int]
    messages: tuple[str, ...]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def content_digest(path: str | Path) -> str:
    """sha256 over the file's non-blank lines in sorted order, so that
    reordering records does not change the digest."""
    lines = sorted(l.strip() for l in Path(path).read_text(encoding="utf-8").splitlines() if l.strip())
    h = hashlib.sha256()
    for line in lines:
        h.update(line.encode("utf-8") + b"\n")
    return h.hexdigest()


def _policy(rec: dict, ann: QueryAnnotation, task: str) -> FrameSamplingPolicy:
    ctx = rec.get("context") or {}
    cap = ctx.get("frame_cap", adapters.GPT_FRAME_CAP if task == "stg" else None)
    return FrameSamplingPolicy(
        duration_s=float(ctx.get("duration_s", ann.duration_s)),
        fps=float(ctx.get("fps", 1.0)),
        frame_cap=cap,
    )


def parse_prediction(rec: dict, ann: QueryAnnotation, task: str, dialect: str | None, plog: ParseLog):
    """Turn one prediction record (canonical or raw) into the task's canonical value.

    Returns None for a refusal (blank response).
    """
    if "parse_error" in rec:
        raise DialectParseError(str(rec["parse_error"]))
    if rec.get("refusal"):
        return None
    if "response" in rec:
        text = rec["response"]
        if not isinstance(text, str):
            raise DialectParseError("response must be a string")
        d = rec.get("dialect") or dialect
        if d not in DIALECTS:
            raise InputError(f"query {ann.query_id!r}: raw response needs a dialect (got {d!r})")
        if not text.strip():
            return None
        if task == "stg":
            return adapters.parse_tube(text, d, _policy(rec, ann, task), plog)
        if task == "tr":
            return adapters.parse_time_ranges(text, d, _policy(rec, ann, task), plog, ann.query_id)
        if task == "char":
            return adapters.parse_char_segments(text, plog)
        return adapters.extract_mc_answer(text, ann.gt.options)

    key = PREDICTION_KEYS[task]
    if key not in rec and not (task == "stg" and "tubes" in rec):
        raise SchemaError(f"prediction for {ann.query_id!r} has neither 'response' nor {key!r}")
    if task == "stg":
        if "tubes" in rec:
            return merge_tubes([tube_from_json(t) for t in rec["tubes"]] or [tube_from_json([])])
        return tube_from_json(rec["tube"])
    if task == "tr":
        return intervals_from_json(rec["intervals"])
    if task == "char":
        return segments_from_json(rec["segments"])
    ans = rec["answer"]
    if ans is None:
        return None
    if isinstance(ans, str):
        return adapters.extract_mc_answer(ans, ann.gt.options)
    if isinstance(ans, bool) or not isinstance(ans, int) or not 0 <= ans < len(ann.gt.options):
        raise SchemaError(f"answer {ans!r} is not a valid option index")
    return ans


def _combine(task: str, values: list, plog: ParseLog):
    if task == "stg":
        warns: list[str] = []
        tube = merge_tubes(values, warns)
        for w in warns:
            plog.note("duplicate", w)
        return tube
    if task == "tr":
        return normalize_intervals([p for v in values for p in v.intervals])
    if task == "char":
        return sorted((s for v in values for s in v), key=lambda s: (s.start_s, s.end_s))
    return values[0]


def score_item(item: WorkItem) -> Outcome:
    task, ann = item.task, item.ann
    plog = ParseLog()
    values = []
    for rec in item.preds:
        try:
            v = parse_prediction(rec, ann, task, item.dialect, plog)
        except (DialectParseError, SchemaError, ValueError) as exc:
            plog.note("parse_failure", f"{ann.query_id}: {exc}")
            continue
        if v is None:
            plog.note("refusal", f"{ann.query_id}: empty answer")
            continue
        values.append(v)
    if not item.preds:
        plog.note("missing_prediction", ann.query_id)

    pred = _combine(task, values, plog) if values else None
    slices = ann.slices()
    if task == "stg":
        rec = score_stg(ann.query_id, pred, ann.gt, slices)
    elif task == "tr":
        rec = score_tr(ann.query_id, pred if pred is not None else IntervalSet(), ann.gt, slices)
    elif task == "char":
        rec = score_char(ann.query_id, pred, ann.gt, slices)
        if rec.metrics["wer_n"] == 0 and rec.metrics["wer_i"] > 0:
            plog.note("wer_empty_reference", f"{ann.query_id}: matched reference text is empty")
    else:
        g: McItem = ann.gt
        rec = score_mc(McItem(g.question_id, g.options, g.gt_answer, pred, g.task_type), slices)
    return Outcome(rec, dict(plog.counts), tuple(plog.messages))


def _run(items: list[WorkItem], workers: int) -> list[Outcome]:
    if workers <= 1 or len(items) < 2:
        return [score_item(it) for it in items]
    chunk = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(score_item, items, chunksize=chunk))


def evaluate_run(
    annotations_path: str | Path,
    predictions_path: str | Path,
    dialect: str | None = None,
    task: str | None = None,
    workers: int | None = None,
) -> RunReport:
    """Evaluate one run.  The report does not depend on record order or on
    the number of workers."""
    if dialect is not None and dialect not in DIALECTS:
        raise InputError(f"unknown dialect {dialect!r}")
    anns = load_annotations(annotations_path)
    tasks = sorted({a.task for a in anns})
    if task is None:
        if len(tasks) != 1:
            raise InputError(f"annotation file mixes tasks {tasks}; pass --task")
        task = tasks[0]
    by_id = {a.query_id: a for a in anns if a.task == task}
    all_tasks = {a.query_id: a.task for a in anns}
    if not by_id:
        raise InputError(f"no {task!r} queries in {annotations_path}")

    preds: dict[str, list[dict]] = {q: [] for q in by_id}
    unknown, mismatched = [], []
    for lineno, rec in read_jsonl(predictions_path):
        qid = rec.get("query_id")
        if not isinstance(qid, str):
            raise SchemaError("prediction record lacks a string query_id", lineno)
        if qid not in by_id:
            if qid in all_tasks:
                mismatched.append(f"{qid} ({all_tasks[qid]})")
            else:
                unknown.append(qid)
            continue
        if rec.get("task", task) != task:
            mismatched.append(f"{qid} ({rec.get('task')})")
            continue
        preds[qid].append(rec)
    if unknown:
        raise InputError(f"predictions for unknown query ids: {', '.join(sorted(set(unknown)))}")
    if mismatched:
        raise InputError(f"predictions for a task other than {task!r}: {', '.join(sorted(mismatched))}")
    if task == "mc":
        dup = sorted(q for q, v in preds.items() if len(v) > 1)
        if dup:
            raise InputError(f"several answers for multiple-choice queries: {', '.join(dup)}")

    items = [
        WorkItem(task, by_id[q], tuple(sorted(preds[q], key=lambda r: repr(sorted(r.items())))), dialect)
        for q in sorted(by_id)
    ]
    outcomes = _run(items, workers if workers is not None else default_workers())

    counts: Counter = Counter()
    messages: list[str] = []
    for o in outcomes:
        counts.update(o.counts)
        messages.extend(o.messages)
    records = [o.record for o in outcomes]

    table = fill_buckets(AGGREGATORS[task](records), task)
    curves = curves_for(records) if task == "tr" else {}
    diagnostics: dict[str, Any] = {
        "counts": {k: counts[k] for k in sorted(counts)},
        "messages": sorted(messages),
        "n_queries": len(records),
        "n_with_prediction": sum(r.has_prediction for r in records),
    }
    provenance = {
        "annotations_sha256": content_digest(annotations_path),
        "predictions_sha256": content_digest(predictions_path),
        "config": {"task": task, "dialect": dialect, "box_tolerance_s": 0.02, "threshold_grid": 101},
    }
    return RunReport(task, table, diagnostics, provenance, curves)


def is_partial(report: RunReport) -> bool:
    return report.diagnostics.get("counts", {}).get("parse_failure", 0) > 0


# -- normalize ---------------------------------------------------------------

def normalize_record(
    rec: dict,
    dialect: str,
    task: str | None = None,
    ann: QueryAnnotation | None = None,
) -> dict:
    """Parse one raw record ``{query_id, response, task?, context?, options?}``
    into a canonical prediction record.  A failure is kept in ``parse_error``."""
    from .canonical import intervals_to_json, segments_to_json, tube_to_json

    qid = rec.get("query_id")
    if not isinstance(qid, str):
        raise SchemaError("raw record lacks a string query_id")
    task = rec.get("task") or task or (ann.task if ann else None)
    if task not in PREDICTION_KEYS:
        raise InputError(f"cannot tell the task of {qid!r}")
    d = rec.get("dialect") or dialect
    text = rec.get("response", "")
    out: dict[str, Any] = {"query_id": qid, "task": task}
    key = PREDICTION_KEYS[task]
    empty = {"stg": [], "tr": [], "char": [], "mc": None}[task]
    ctx = rec.get("context") or {}
    duration = ctx.get("duration_s", ann.duration_s if ann else None)
    plog = ParseLog()
    try:
        if not isinstance(text, str):
            raise DialectParseError("response must be a string")
        if not text.strip():
            out[key] = empty
            out["refusal"] = True
            return out
        if task == "stg":
            policy = None
            if d == "gpt":
                if duration is None:
                    raise InputError(f"{qid}: gpt output needs the video duration")
                policy = FrameSamplingPolicy(float(duration), float(ctx.get("fps", 1.0)), ctx.get("frame_cap", 120))
            out[key] = tube_to_json(adapters.parse_tube(text, d, policy, plog))
        elif task == "tr":
            policy = None
            if d == "gpt" and duration is not None:
                policy = FrameSamplingPolicy(float(duration), float(ctx.get("fps", 1.0)), ctx.get("frame_cap"))
            out[key] = intervals_to_json(adapters.parse_time_ranges(text, d, policy, plog, qid))
            if plog.counts["parse_failure"]:
                raise DialectParseError(f"no time range in {text[:80]!r}", text, d)
        elif task == "char":
            out[key] = segments_to_json(adapters.parse_char_segments(text, plog))
        else:
            options = rec.get("options") or (ann.gt.options if ann else None)
            if not options:
                raise InputError(f"{qid}: multiple-choice answer needs the options")
            out[key] = adapters.extract_mc_answer(text, options)
    except (DialectParseError, ValueError) as exc:
        out[key] = empty
        out["parse_error"] = str(exc)
    if plog.counts:
        out["warnings"] = dict(sorted(plog.counts.items()))
    return out
