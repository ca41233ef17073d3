"""JSON forms of the canonical types, shared by annotation and prediction files.

Tube:      ``[{"t": 30, "box": [x0, y0, x1, y1]}, ...]``
Intervals: ``[[start_s, end_s], ...]``
Segments:  ``[{"text": str, "start": s, "end": s, "boxes": [{"timestamp": s, "box_2d": [...]}]}]``
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterator

from .core import BoundingBox, IntervalSet, Tube, normalize_intervals
from .errors import SchemaError
from .plot_track import TranscriptSegment

TASKS = ("stg", "tr", "char", "mc")
# payload key of a canonical prediction record, per task
PREDICTION_KEYS = {"stg": "tube", "tr": "intervals", "char": "segments", "mc": "answer"}


def _num(x: Any, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"{what} must be a number, got {x!r}")
    return float(x)


def tube_to_json(tube: Tube) -> list[dict]:
    return [{"t": t, "box": b.as_list()} for t, b in tube.items()]


def tube_from_json(obj: Any) -> Tube:
    if not isinstance(obj, list):
        raise SchemaError("tube must be a list of {t, box} entries")
    boxes: dict[int, BoundingBox] = {}
    for entry in obj:
        if not isinstance(entry, dict) or "t" not in entry or "box" not in entry:
            raise SchemaError(f"bad tube entry {entry!r}")
        t = entry["t"]
        if isinstance(t, float) and t.is_integer():
            t = int(t)
        if isinstance(t, bool) or not isinstance(t, int) or t < 0:
            raise SchemaError(f"non-1Hz tube: timestamp {entry['t']!r} is not a whole second")
        if t in boxes:
            raise SchemaError(f"duplicate tube timestamp {t}")
        try:
            boxes[t] = BoundingBox.from_seq([_num(v, "box coordinate") for v in entry["box"]])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad box at t={t}: {exc}") from None
    return Tube.from_mapping(boxes)


def intervals_to_json(iv: IntervalSet) -> list[list[float]]:
    return [[s, e] for s, e in iv.intervals]


def intervals_from_json(obj: Any) -> IntervalSet:
    if not isinstance(obj, list):
        raise SchemaError("intervals must be a list of [start, end] pairs")
    pairs = []
    for p in obj:
        if not isinstance(p, (list, tuple)) or len(p) != 2:
            raise SchemaError(f"bad interval {p!r}")
        pairs.append((_num(p[0], "interval start"), _num(p[1], "interval end")))
    try:
        return normalize_intervals(pairs)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def segments_to_json(segs: list[TranscriptSegment]) -> list[dict]:
    return [
        {
            "text": s.text,
            "start": s.start_s,
            "end": s.end_s,
            "boxes": [{"timestamp": t, "box_2d": b.as_list()} for t, b in s.boxes],
        }
        for s in segs
    ]


def segment_from_json(obj: Any) -> TranscriptSegment:
    if not isinstance(obj, dict):
        raise SchemaError(f"segment must be an object, got {type(obj).__name__}")
    for key in ("start", "end"):
        if key not in obj:
            raise SchemaError(f"segment missing {key!r}")
    text = obj.get("text", "")
    if not isinstance(text, str):
        raise SchemaError("segment text must be a string")
    boxes = []
    for b in obj.get("boxes") or []:
        if not isinstance(b, dict) or "timestamp" not in b or "box_2d" not in b:
            raise SchemaError(f"bad segment box {b!r}")
        try:
            box = BoundingBox.from_seq([_num(v, "box coordinate") for v in b["box_2d"]])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad segment box: {exc}") from None
        boxes.append((_num(b["timestamp"], "box timestamp"), box))
    try:
        return TranscriptSegment(_num(obj["start"], "start"), _num(obj["end"], "end"), text, tuple(boxes))
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def segments_from_json(obj: Any) -> list[TranscriptSegment]:
    if not isinstance(obj, list):
        raise SchemaError("segments must be a list")
    segs = [segment_from_json(o) for o in obj]
    return sorted(segs, key=lambda s: (s.start_s, s.end_s))


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, record)`` for every non-blank line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", lineno) from None
            if not isinstance(obj, dict):
                raise SchemaError("record must be a JSON object", lineno)
            yield lineno, obj


def dump_jsonl(records, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
