"""Domain types and exact temporal / box algebra.

Tubes live on a 1 Hz integer-second grid; interval sets stay in continuous
seconds.  Everything here is immutable and side-effect free.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ConfigurationError, MalformedPredictionError

SAMPLING_RATE = 1


def round_half_up(x: float) -> int:
    """Round to the nearest integer, ties going up (2.5 -> 3)."""
    lo = math.floor(x)
    return int(lo + 1) if x - lo >= 0.5 else int(lo)


@dataclass(frozen=True)
class BoundingBox:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        for name in ("x0", "y0", "x1", "y1"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValueError(f"BoundingBox.{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not (0.0 <= self.x0 <= self.x1 <= 1.0 and 0.0 <= self.y0 <= self.y1 <= 1.0):
            raise ValueError(f"invalid normalized box {self.as_list()}")

    @classmethod
    def from_seq(cls, seq: Sequence[float]) -> "BoundingBox":
        if len(seq) != 4:
            raise ValueError(f"box needs 4 coordinates, got {len(seq)}")
        return cls(*seq)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when the union has no area."""
    iw = min(a.x1, b.x1) - max(a.x0, b.x0)
    ih = min(a.y1, b.y1) - max(a.y0, b.y0)
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class TemporalSupport:
    """Sorted integer seconds at which a tube is defined.  Gaps are allowed."""

    timestamps: tuple[int, ...] = ()
    sampling_rate: int = SAMPLING_RATE

    def __post_init__(self) -> None:
        ts = tuple(self.timestamps)
        prev = -1
        for t in ts:
            if isinstance(t, bool) or not isinstance(t, int):
                raise ValueError(f"timestamps must be integers, got {t!r}")
            if t <= prev:
                raise ValueError("timestamps must be strictly increasing and non-negative")
            prev = t
        object.__setattr__(self, "timestamps", ts)

    @classmethod
    def of(cls, timestamps: Iterable[int], sampling_rate: int = SAMPLING_RATE) -> "TemporalSupport":
        return cls(tuple(sorted(set(timestamps))), sampling_rate)

    def __len__(self) -> int:
        return len(self.timestamps)

    def __iter__(self):
        return iter(self.timestamps)

    def __contains__(self, t: object) -> bool:
        i = bisect_left(self.timestamps, t)  # type: ignore[arg-type]
        return i < len(self.timestamps) and self.timestamps[i] == t


def _check_rates(a: TemporalSupport, b: TemporalSupport) -> None:
    if a.sampling_rate != b.sampling_rate:
        raise ConfigurationError(
            f"sampling rate mismatch: {a.sampling_rate} vs {b.sampling_rate}"
        )


def support_intersection(a: TemporalSupport, b: TemporalSupport) -> TemporalSupport:
    _check_rates(a, b)
    return TemporalSupport(tuple(sorted(set(a.timestamps) & set(b.timestamps))), a.sampling_rate)


def support_union(a: TemporalSupport, b: TemporalSupport) -> TemporalSupport:
    _check_rates(a, b)
    return TemporalSupport(tuple(sorted(set(a.timestamps) | set(b.timestamps))), a.sampling_rate)


@dataclass(frozen=True)
class Tube:
    """One box per support timestamp; ``boxes[i]`` belongs to ``support.timestamps[i]``."""

    support: TemporalSupport = field(default_factory=TemporalSupport)
    boxes: tuple[BoundingBox, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if len(self.boxes) != len(self.support.timestamps):
            raise ValueError(
                f"tube has {len(self.boxes)} boxes for {len(self.support.timestamps)} timestamps"
            )

    @classmethod
    def from_mapping(cls, boxes: Mapping[int, BoundingBox]) -> "Tube":
        ts = tuple(sorted(boxes))
        return cls(TemporalSupport(ts), tuple(boxes[t] for t in ts))

    def __len__(self) -> int:
        return len(self.boxes)

    @property
    def is_empty(self) -> bool:
        return not self.boxes

    def box_at(self, t: int) -> BoundingBox | None:
        ts = self.support.timestamps
        i = bisect_left(ts, t)
        if i < len(ts) and ts[i] == t:
            return self.boxes[i]
        return None

    def items(self):
        return zip(self.support.timestamps, self.boxes)

    def mean_area(self) -> float:
        if not self.boxes:
            raise ValueError("mean area of an empty tube")
        return math.fsum(b.area for b in self.boxes) / len(self.boxes)


@dataclass(frozen=True)
class IntervalSet:
    """Closed time ranges in seconds.  Use :func:`normalize_intervals` to sort and merge."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        ivs = []
        for pair in self.intervals:
            s, e = float(pair[0]), float(pair[1])
            if not (math.isfinite(s) and math.isfinite(e)):
                raise MalformedPredictionError(f"non-finite interval ({s}, {e})")
            if s > e:
                raise MalformedPredictionError(f"interval start {s} > end {e}")
            ivs.append((s, e))
        object.__setattr__(self, "intervals", tuple(ivs))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def measure(self) -> float:
        """Total length; assumes the set is normalized."""
        return math.fsum(e - s for s, e in self.intervals)


def normalize_intervals(
    raw: IntervalSet | Iterable[Sequence[float]], query_id: str | None = None
) -> IntervalSet:
    """Sort and merge overlapping or touching ranges."""
    pairs = raw.intervals if isinstance(raw, IntervalSet) else [tuple(p) for p in raw]
    for s, e in pairs:
        if s > e:
            raise MalformedPredictionError(f"interval start {s} > end {e}", query_id)
    merged: list[list[float]] = []
    for s, e in sorted((float(s), float(e)) for s, e in pairs):
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return IntervalSet(tuple((s, e) for s, e in merged))


def intersection_measure(a: IntervalSet, b: IntervalSet) -> float:
    """Length of the intersection of two normalized interval sets."""
    i = j = 0
    parts = []
    A, B = a.intervals, b.intervals
    while i < len(A) and j < len(B):
        lo = max(A[i][0], B[j][0])
        hi = min(A[i][1], B[j][1])
        if hi > lo:
            parts.append(hi - lo)
        if A[i][1] < B[j][1]:
            i += 1
        else:
            j += 1
    return math.fsum(parts)


def discretize(iv: IntervalSet) -> TemporalSupport:
    """Integer seconds covered by the set, with endpoints rounded half-up and kept."""
    seconds: set[int] = set()
    for s, e in iv.intervals:
        lo, hi = round_half_up(s), round_half_up(e)
        seconds.update(range(max(lo, 0), hi + 1))
    return TemporalSupport(tuple(sorted(seconds)))


@dataclass(frozen=True)
class TubeOverlapStats:
    s_sum: float
    n_inter: int
    n_union: int
    n_pred: int
    n_gt: int


@dataclass(frozen=True)
class ScoreRecord:
    """Per-query outcome.  ``None`` marks a metric that is undefined for this
    query and must be left out of its average (not counted as 0)."""

    query_id: str
    task: str
    metrics: Mapping[str, float | None]
    slices: tuple[tuple[str, str], ...] = ()
    has_prediction: bool = True


@dataclass(frozen=True)
class SliceRow:
    n: int
    metrics: Mapping[str, float | None]


SliceTable = dict[str, dict[str, SliceRow]]


def group_records(records: Iterable[ScoreRecord], slicer=None) -> dict[str, dict[str, list[ScoreRecord]]]:
    """Bucket records by slice key.  Every record also lands in ``overall/all``.

    ``slicer`` maps a record to its (dimension, bucket) pairs and defaults to
    ``record.slices``.  Records are ordered by query id inside each group so
    downstream folds do not depend on input order.
    """
    slicer = slicer or (lambda r: r.slices)
    groups: dict[str, dict[str, list[ScoreRecord]]] = {"overall": {"all": []}}
    for rec in sorted(records, key=lambda r: r.query_id):
        groups["overall"]["all"].append(rec)
        for dim, bucket in slicer(rec):
            groups.setdefault(dim, {}).setdefault(bucket, []).append(rec)
    return groups


def mean_present(values: Iterable[float | None]) -> float | None:
    """Mean over non-missing values; ``None`` for an empty selection."""
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return math.fsum(vals) / len(vals)
