"""Parsers for raw model responses.

Each dialect has its own clock and coordinate conventions:

========  ======================  ==========================  ==================
dialect   tube timestamp          tube coordinates            time ranges
========  ======================  ==========================  ==================
vidi      seconds or MM:SS        [0, 1]                      MM:SS / HH:MM:SS
gemini    "MM:SS"                 integers in [0, 1000]       HH:MM:SS
gpt       0-based frame index     [0, 1]                      frame index ranges
qwen      float seconds           integers in [0, 1000]       float seconds
========  ======================  ==========================  ==================

Everything is mapped onto integer seconds (tubes) or float seconds
(ranges) and boxes in [0, 1].  Parsers never crash on garbage: they either
return a canonical value or raise :class:`DialectParseError`.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Sequence

from .core import BoundingBox, IntervalSet, Tube, normalize_intervals, round_half_up
from .errors import DialectParseError
from .plot_track import TranscriptSegment, SEGMENT_BOX_SLACK_S

log = logging.getLogger(__name__)

DIALECTS = ("vidi", "gemini", "gpt", "qwen")
GPT_FRAME_CAP = 120


@dataclass
class ParseLog:
    """Collects non-fatal events (clamps, skipped entries, ...) while parsing."""

    counts: Counter = field(default_factory=Counter)
    messages: list[str] = field(default_factory=list)

    def note(self, kind: str, message: str) -> None:
        self.counts[kind] += 1
        self.messages.append(f"{kind}: {message}")
        log.debug("%s: %s", kind, message)

    def merge(self, other: "ParseLog") -> None:
        self.counts.update(other.counts)
        self.messages.extend(other.messages)


@dataclass(frozen=True)
class FrameSamplingPolicy:
    """Maps sampled frame indices back to seconds.

    Videos shorter than ``frame_cap / fps`` seconds are sampled at ``fps``;
    longer ones are subsampled uniformly to ``frame_cap`` frames.
    """

    duration_s: float
    fps: float = 1.0
    frame_cap: int | None = GPT_FRAME_CAP

    @property
    def subsampled(self) -> bool:
        return self.frame_cap is not None and self.duration_s * self.fps >= self.frame_cap

    @property
    def n_frames(self) -> int | float:
        """Number of sampled frames; unbounded when the duration is unknown (inf)."""
        if self.subsampled:
            return int(self.frame_cap)
        if math.isinf(self.duration_s):
            return math.inf
        return max(1, math.ceil(self.duration_s * self.fps))

    def frame_time(self, i: int) -> int | None:
        """Integer second of frame ``i``, or None when the index is out of range."""
        if i < 0 or i >= self.n_frames:
            return None
        if self.subsampled:
            return round_half_up(i * self.duration_s / self.frame_cap)
        return round_half_up(i / self.fps)


@dataclass(frozen=True)
class RawPrediction:
    query_id: str
    dialect: str
    payload: str
    task: str = "stg"
    context: FrameSamplingPolicy | None = None

    def __post_init__(self) -> None:
        if self.dialect not in DIALECTS:
            raise ValueError(f"unknown dialect {self.dialect!r}")


# -- helpers -----------------------------------------------------------------

_FENCE = re.compile(r"```[a-zA-Z0-9_-]*")


def extract_json(payload: str, dialect: str | None = None, want: str = "[{") -> Any:
    """Pull the first JSON value out of a response that may carry code fences or prose."""
    if not isinstance(payload, str):
        raise DialectParseError("payload is not text", "", dialect)
    text = _FENCE.sub("", payload)
    dec = json.JSONDecoder()
    for m in re.finditer(r"[\[{]", text):
        if m.group() not in want:
            continue
        try:
            value, _ = dec.raw_decode(text, m.start())
        except (json.JSONDecodeError, RecursionError):
            continue
        return value
    raise DialectParseError("no JSON value found", payload, dialect)


_CLOCK = re.compile(r"^\s*(\d+(?:\.\d+)?)(?::(\d+(?:\.\d+)?))?(?::(\d+(?:\.\d+)?))?\s*$")


def parse_clock(token: str) -> float:
    """Seconds from ``SS``, ``MM:SS`` or ``HH:MM:SS`` (fractional seconds allowed)."""
    m = _CLOCK.match(str(token))
    if not m:
        raise ValueError(f"not a timestamp: {token!r}")
    parts = [float(p) for p in m.groups() if p is not None]
    secs = 0.0
    for p in parts:
        secs = secs * 60 + p
    return secs


def format_mmss(seconds: int) -> str:
    return f"{seconds // 60:02d}:{seconds % 60:02d}"


def _as_number(x: Any) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float, str)):
        raise ValueError(f"not a number: {x!r}")
    v = float(x)
    if not math.isfinite(v):
        raise ValueError(f"not finite: {x!r}")
    return v


def make_box(coords: Any, scale: float, plog: ParseLog) -> BoundingBox:
    """Normalize, clamp to [0, 1] and reorder corners; raises ValueError on junk."""
    if not isinstance(coords, (list, tuple)) or len(coords) != 4:
        raise ValueError(f"box needs 4 coordinates, got {coords!r}")
    vals = [_as_number(c) / scale for c in coords]
    clamped = [min(max(v, 0.0), 1.0) for v in vals]
    if clamped != vals:
        plog.note("clamped", f"box {coords!r} clamped into frame")
    x0, y0, x1, y1 = clamped
    if x0 > x1 or y0 > y1:
        plog.note("reordered", f"box {coords!r} had swapped corners")
        x0, x1 = min(x0, x1), max(x0, x1)
        y0, y1 = min(y0, y1), max(y0, y1)
    return BoundingBox(x0, y0, x1, y1)


def _collect(entries: list[tuple[int, BoundingBox]], plog: ParseLog) -> Tube:
    boxes: dict[int, BoundingBox] = {}
    for t, box in entries:
        if t < 0:
            plog.note("skipped", f"negative timestamp {t}")
            continue
        cur = boxes.get(t)
        if cur is not None:
            plog.note("duplicate", f"two boxes at t={t}s; kept the larger one")
            if box.area <= cur.area:
                continue
        boxes[t] = box
    return Tube.from_mapping(boxes)


def _tube_entries(payload: str, dialect: str) -> list:
    data = extract_json(payload, dialect, want="[{")
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise DialectParseError("expected a JSON array", payload, dialect)
    return data


def _parse_tube(payload, dialect, time_key, box_keys, scale, to_second, plog) -> Tube:
    plog = plog if plog is not None else ParseLog()
    entries = []
    for e in _tube_entries(payload, dialect):
        try:
            if not isinstance(e, dict):
                raise ValueError(f"entry is not an object: {e!r}")
            coords = next((e[k] for k in box_keys if k in e), None)
            if time_key not in e or coords is None:
                raise ValueError(f"entry lacks {time_key!r} or box: {e!r}")
            t = to_second(e[time_key])
            if t is None:
                continue
            entries.append((t, make_box(coords, scale, plog)))
        except (ValueError, TypeError, OverflowError) as exc:
            plog.note("skipped", str(exc)[:200])
    return _collect(entries, plog)


# -- tube parsers ------------------------------------------------------------

def _clock_second(v: Any) -> int:
    if isinstance(v, str):
        return round_half_up(parse_clock(v))
    return round_half_up(_as_number(v))


def parse_gemini_tube(payload: str, plog: ParseLog | None = None) -> Tube:
    return _parse_tube(payload, "gemini", "timestamp", ("box_2d",), 1000.0, _clock_second, plog)


def parse_qwen_tube(payload: str, plog: ParseLog | None = None) -> Tube:
    return _parse_tube(
        payload, "qwen", "time", ("bbox_2d", "box_2d"), 1000.0,
        lambda v: round_half_up(_as_number(v)), plog,
    )


def parse_vidi_tube(payload: str, plog: ParseLog | None = None) -> Tube:
    return _parse_tube(payload, "vidi", "timestamp", ("box", "box_2d"), 1.0, _clock_second, plog)


def parse_gpt_tube(payload: str, policy: FrameSamplingPolicy, plog: ParseLog | None = None) -> Tube:
    if policy is None:
        raise DialectParseError("gpt tubes need a frame sampling policy", "", "gpt")
    plog = plog if plog is not None else ParseLog()

    def to_second(v: Any) -> int | None:
        x = _as_number(v)
        if not x.is_integer():
            raise ValueError(f"frame index {v!r} is not an integer")
        t = policy.frame_time(int(x))
        if t is None:
            plog.note("skipped", f"frame index {int(x)} outside {policy.n_frames} sampled frames")
        return t

    return _parse_tube(payload, "gpt", "frame", ("box", "box_2d"), 1.0, to_second, plog)


def parse_tube(
    payload: str, dialect: str, policy: FrameSamplingPolicy | None = None, plog: ParseLog | None = None
) -> Tube:
    if dialect == "gemini":
        return parse_gemini_tube(payload, plog)
    if dialect == "qwen":
        return parse_qwen_tube(payload, plog)
    if dialect == "gpt":
        return parse_gpt_tube(payload, policy, plog)
    if dialect == "vidi":
        return parse_vidi_tube(payload, plog)
    raise ValueError(f"unknown dialect {dialect!r}")


def tube_to_dialect(tube: Tube, dialect: str, policy: FrameSamplingPolicy | None = None) -> str:
    """Render a canonical tube the way the given model would have answered."""
    out = []
    for t, b in tube.items():
        if dialect == "gemini":
            out.append({"timestamp": format_mmss(t), "box_2d": [round(v * 1000) for v in b.as_list()]})
        elif dialect == "qwen":
            out.append({"time": float(t), "bbox_2d": [round(v * 1000) for v in b.as_list()]})
        elif dialect == "vidi":
            out.append({"timestamp": format_mmss(t), "box": b.as_list()})
        elif dialect == "gpt":
            if policy is None or policy.subsampled:
                raise ValueError("gpt rendering needs a 1 fps sampling policy")
            out.append({"frame": int(t * policy.fps), "box": b.as_list()})
        else:
            raise ValueError(f"unknown dialect {dialect!r}")
    return json.dumps(out)


# -- time ranges -------------------------------------------------------------

_TIME = r"\d+(?::\d+){0,2}(?:\.\d+)?"
_RANGE = re.compile(rf"({_TIME})\s*(?:-|–|—|~|\bto\b)\s*({_TIME})")
_SINGLE = re.compile(rf"(?<![\d:.])({_TIME})(?![\d:.])")


def parse_time_ranges(
    payload: str,
    dialect: str,
    policy: FrameSamplingPolicy | None = None,
    plog: ParseLog | None = None,
    query_id: str | None = None,
) -> IntervalSet:
    """Read "A-B" ranges separated by commas or newlines into seconds.

    gpt answers are frame indices (converted with ``policy``, 1 fps by
    default); the other dialects give clock times or plain seconds.
    Ranges with start after end are dropped and flagged.
    """
    plog = plog if plog is not None else ParseLog()
    if dialect not in DIALECTS:
        raise ValueError(f"unknown dialect {dialect!r}")
    if not isinstance(payload, str):
        raise DialectParseError("payload is not text", "", dialect)
    if dialect == "gpt" and policy is None:
        policy = FrameSamplingPolicy(duration_s=math.inf, fps=1.0, frame_cap=None)

    def to_seconds(tok: str) -> float:
        if dialect == "gpt":
            if ":" in tok or "." in tok:
                raise ValueError(f"frame index expected, got {tok!r}")
            t = policy.frame_time(int(tok))
            if t is None:
                raise ValueError(f"frame index {tok} outside sampled frames")
            return float(t)
        return parse_clock(tok)

    pairs: list[tuple[float, float]] = []
    spans = []
    for m in _RANGE.finditer(payload):
        spans.append(m.span())
        try:
            s, e = to_seconds(m.group(1)), to_seconds(m.group(2))
        except (ValueError, OverflowError) as exc:
            plog.note("malformed_range", f"{m.group(0)!r}: {exc}")
            continue
        if s > e:
            plog.note("malformed_range", f"{m.group(0)!r}: start after end")
            continue
        pairs.append((s, e))

    if dialect == "gpt":
        # bare frame indices outside any range are single frames
        rest = list(payload)
        for a, b in spans:
            rest[a:b] = " " * (b - a)
        for m in _SINGLE.finditer("".join(rest)):
            try:
                t = to_seconds(m.group(1))
            except (ValueError, OverflowError) as exc:
                plog.note("malformed_range", f"{m.group(0)!r}: {exc}")
                continue
            pairs.append((t, t))

    if not pairs:
        plog.note("parse_failure", f"no time range in {payload[:80]!r}" + (f" ({query_id})" if query_id else ""))
        return IntervalSet()
    return normalize_intervals(pairs, query_id)


# -- character track segments -----------------------------------------------

def _segment(obj: Any, plog: ParseLog, payload: str) -> TranscriptSegment:
    if not isinstance(obj, dict):
        raise DialectParseError("segment is not a JSON object", payload)
    try:
        start = _as_number(obj["start"])
        end = _as_number(obj["end"])
    except (KeyError, ValueError) as exc:
        raise DialectParseError(f"segment needs numeric start/end ({exc})", payload) from None
    if start > end:
        raise DialectParseError(f"segment start {start} > end {end}", payload)
    text = obj.get("text", "")
    if not isinstance(text, str):
        raise DialectParseError("segment text is not a string", payload)
    raw_boxes = obj.get("boxes") or []
    if not isinstance(raw_boxes, list):
        raise DialectParseError("segment boxes is not a list", payload)
    boxes = []
    for b in raw_boxes:
        try:
            if not isinstance(b, dict):
                raise ValueError(f"box entry is not an object: {b!r}")
            t = _as_number(b["timestamp"])
            if not (start - SEGMENT_BOX_SLACK_S <= t <= end + SEGMENT_BOX_SLACK_S):
                raise ValueError(f"box at {t}s outside segment [{start}, {end}]")
            boxes.append((t, make_box(b.get("box_2d", b.get("box")), 1.0, plog)))
        except (KeyError, ValueError, TypeError) as exc:
            plog.note("skipped", str(exc)[:200])
    return TranscriptSegment(start, end, text, tuple(boxes))


def parse_char_segments(payload: str, plog: ParseLog | None = None) -> list[TranscriptSegment]:
    """Segments from one JSON object or an array of them, sorted by start."""
    plog = plog if plog is not None else ParseLog()
    data = extract_json(payload, want="[{")
    if isinstance(data, dict):
        # tolerate {"segments": [...]} wrappers
        data = data["segments"] if isinstance(data.get("segments"), list) else [data]
    if not isinstance(data, list):
        raise DialectParseError("expected a JSON object or array", payload)
    segs = [_segment(o, plog, payload) for o in data]
    return sorted(segs, key=lambda s: (s.start_s, s.end_s))


# -- multiple choice -----------------------------------------------------------

_LETTER = re.compile(
    r"^\s*(?:(?:the\s+)?(?:correct\s+)?answer\s*(?:is)?\s*[:：]?\s*)?"
    r"(?:option\s+)?[\(\[]?([A-E])(?:[\)\]\.:,]|\s*$)",
    re.IGNORECASE,
)


def extract_mc_answer(text: str | None, options: Sequence[str]) -> int | None:
    """Option index named by a free-text answer, or None.

    A leading option letter ("B", "(c) because ...") wins; otherwise the
    answer must equal one option text up to case and whitespace.
    """
    if not options:
        raise ValueError("no options to choose from")
    if not isinstance(text, str):
        return None
    m = _LETTER.match(text)
    if m:
        idx = ord(m.group(1).upper()) - ord("A")
        if idx < len(options):
            return idx
    fold = " ".join(text.lower().split())
    for i, opt in enumerate(options):
        if " ".join(str(opt).lower().split()) == fold:
            return i
    return None
