"""Plot-understanding scores: speaker transcript segments and multiple choice.

Character track: ground-truth segments are matched one-to-one to predicted
segments by temporal IoU, then text (WER) and face boxes (sIoU) are compared
on the matched pairs only.  Reasoning track: plain multiple-choice accuracy.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (
    BoundingBox,
    ScoreRecord,
    SliceRow,
    SliceTable,
    box_iou,
    group_records,
    mean_present,
)

BOX_TOLERANCE_S = 0.020
# slack for box timestamps relative to the segment bounds
SEGMENT_BOX_SLACK_S = 0.5
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class TranscriptSegment:
    start_s: float
    end_s: float
    text: str = ""
    boxes: tuple[tuple[float, BoundingBox], ...] = ()

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start_s) and math.isfinite(self.end_s)):
            raise ValueError("segment bounds must be finite")
        if self.start_s > self.end_s:
            raise ValueError(f"segment start {self.start_s} > end {self.end_s}")
        boxes = tuple(sorted(((float(t), b) for t, b in self.boxes), key=lambda tb: tb[0]))
        for t, _ in boxes:
            if not (self.start_s - SEGMENT_BOX_SLACK_S <= t <= self.end_s + SEGMENT_BOX_SLACK_S):
                raise ValueError(
                    f"box at {t}s outside segment [{self.start_s}, {self.end_s}]"
                )
        object.__setattr__(self, "start_s", float(self.start_s))
        object.__setattr__(self, "end_s", float(self.end_s))
        object.__setattr__(self, "boxes", boxes)


@dataclass(frozen=True)
class SegmentMatching:
    pairs: tuple[tuple[int, int, float], ...] = ()
    unmatched_gt: tuple[int, ...] = ()
    unmatched_pred: tuple[int, ...] = ()


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    n_ref: int
    wer: float
    empty_reference: bool = False


@dataclass(frozen=True)
class BoxMatch:
    siou: float
    n_box: int
    n_gt_boxes: int
    iou_sum: float

    @property
    def coverage(self) -> float | None:
        return self.n_box / self.n_gt_boxes if self.n_gt_boxes else None


@dataclass(frozen=True)
class McItem:
    question_id: str
    options: tuple[str, ...]
    gt_answer: int
    pred_answer: int | None = None
    task_type: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))
        if not 0 <= self.gt_answer < len(self.options):
            raise ValueError(f"answer index {self.gt_answer} out of range for {len(self.options)} options")

    @property
    def correct(self) -> bool:
        return self.pred_answer is not None and self.pred_answer == self.gt_answer


def segment_iou(a: TranscriptSegment, b: TranscriptSegment) -> float:
    inter = min(a.end_s, b.end_s) - max(a.start_s, b.start_s)
    if inter <= 0:
        return 0.0
    union = (a.end_s - a.start_s) + (b.end_s - b.start_s) - inter
    return inter / union if union > 0 else 0.0


def _order(segs: Sequence[TranscriptSegment]) -> list[int]:
    return sorted(range(len(segs)), key=lambda i: (segs[i].start_s, segs[i].end_s, i))


def _best_total(w: np.ndarray, rows: list[int], cols: list[int]) -> float:
    if not rows or not cols:
        return 0.0
    sub = w[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub, maximize=True)
    return math.fsum(sub[r, c])


def match_segments(
    gt: Sequence[TranscriptSegment], pred: Sequence[TranscriptSegment]
) -> SegmentMatching:
    """Maximum total-IoU one-to-one matching; zero-overlap pairs are never made.

    Among equally good matchings the one that pairs the earliest ground-truth
    segments, each with the earliest possible prediction, is returned.
    """
    g_order, p_order = _order(gt), _order(pred)
    w = np.array(
        [[segment_iou(gt[g], pred[p]) for p in p_order] for g in g_order], dtype=float
    ).reshape(len(gt), len(pred))
    best = _best_total(w, list(range(len(gt))), list(range(len(pred))))

    fixed: list[float] = []
    free_cols = list(range(len(pred)))
    chosen: list[tuple[int, int]] = []
    for g in range(len(gt)):
        rest = list(range(g + 1, len(gt)))
        for p in free_cols:
            if w[g, p] <= 0:
                continue
            cols = [c for c in free_cols if c != p]
            total = math.fsum(fixed + [w[g, p], _best_total(w, rest, cols)])
            if total >= best - _TIE_TOL:
                chosen.append((g, p))
                fixed.append(w[g, p])
                free_cols = cols
                break

    pairs = tuple(sorted((g_order[g], p_order[p], float(w[g, p])) for g, p in chosen))
    used_g = {g for g, _, _ in pairs}
    used_p = {p for _, p, _ in pairs}
    return SegmentMatching(
        pairs=pairs,
        unmatched_gt=tuple(i for i in range(len(gt)) if i not in used_g),
        unmatched_pred=tuple(i for i in range(len(pred)) if i not in used_p),
    )


def mean_segment_tiou(m: SegmentMatching) -> float:
    if not m.pairs:
        return 0.0
    return math.fsum(iou for _, _, iou in m.pairs) / len(m.pairs)


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip surrounding punctuation per word."""
    out = []
    for tok in text.lower().split():
        tok = tok.strip(string.punctuation)
        if tok:
            out.append(tok)
    return out


def wer_breakdown(ref: Sequence[str], hyp: Sequence[str]) -> WerBreakdown:
    """Word-level edit distance with unit costs, split into S/D/I counts.

    When several alignments share the minimum cost, substitutions are
    preferred over deletions, and deletions over insertions.
    """
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        ri = ref[i - 1]
        row, prev = d[i], d[i - 1]
        row[0] = i
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (ri != hyp[j - 1]), prev[j] + 1, row[j - 1] + 1)

    s = dl = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            s += ref[i - 1] != hyp[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            dl += 1
            i -= 1
        else:
            ins += 1
            j -= 1

    if n == 0:
        return WerBreakdown(0, 0, ins, 0, float(ins), empty_reference=ins > 0)
    return WerBreakdown(int(s), dl, ins, n, (s + dl + ins) / n)


def corpus_wer(
    m: SegmentMatching, gt: Sequence[TranscriptSegment], pred: Sequence[TranscriptSegment]
) -> WerBreakdown:
    """WER between the concatenated texts of matched pairs, in ground-truth time order."""
    pairs = sorted(m.pairs, key=lambda p: (gt[p[0]].start_s, gt[p[0]].end_s, p[0]))
    ref: list[str] = []
    hyp: list[str] = []
    for g, p, _ in pairs:
        ref += tokenize(gt[g].text)
        hyp += tokenize(pred[p].text)
    return wer_breakdown(ref, hyp)


def _pair_boxes(
    gt_boxes: Sequence[tuple[float, BoundingBox]],
    pred_boxes: Sequence[tuple[float, BoundingBox]],
    tolerance_s: float,
) -> list[tuple[int, int]]:
    cands = []
    for i, (tg, _) in enumerate(gt_boxes):
        for j, (tp, _) in enumerate(pred_boxes):
            dt = abs(tg - tp)
            # float slack so that an exact 20 ms offset still pairs
            if dt <= tolerance_s + 1e-9:
                cands.append((dt, tg, tp, i, j))
    cands.sort()
    used_g: set[int] = set()
    used_p: set[int] = set()
    out = []
    for _, _, _, i, j in cands:
        if i in used_g or j in used_p:
            continue
        used_g.add(i)
        used_p.add(j)
        out.append((i, j))
    return out


def match_boxes(
    m: SegmentMatching,
    gt: Sequence[TranscriptSegment],
    pred: Sequence[TranscriptSegment],
    tolerance_s: float = BOX_TOLERANCE_S,
) -> BoxMatch:
    """Mean box IoU over box pairs aligned by timestamp inside matched segments."""
    ious: list[float] = []
    n_gt_boxes = 0
    for g, p, _ in m.pairs:
        gb, pb = gt[g].boxes, pred[p].boxes
        n_gt_boxes += len(gb)
        for i, j in _pair_boxes(gb, pb, tolerance_s):
            ious.append(box_iou(gb[i][1], pb[j][1]))
    iou_sum = math.fsum(ious)
    siou = iou_sum / len(ious) if ious else 0.0
    return BoxMatch(siou=siou, n_box=len(ious), n_gt_boxes=n_gt_boxes, iou_sum=iou_sum)


def mc_accuracy(items: Sequence[McItem]) -> float:
    if not items:
        raise ValueError("accuracy over an empty question list")
    return sum(it.correct for it in items) / len(items)


def mc_accuracy_macro(items: Sequence[McItem]) -> float:
    """Unweighted mean of per-task-type accuracies (untyped items form one group)."""
    if not items:
        raise ValueError("accuracy over an empty question list")
    by_type: dict[str | None, list[McItem]] = {}
    for it in items:
        by_type.setdefault(it.task_type, []).append(it)
    return math.fsum(mc_accuracy(v) for v in by_type.values()) / len(by_type)


# -- per-query records and aggregation ---------------------------------------

CHAR_SUMS = ("tiou_sum", "n_match", "wer_s", "wer_d", "wer_i", "wer_n", "siou_sum", "n_box", "n_gt_box")


def score_char(
    query_id: str,
    pred: Sequence[TranscriptSegment] | None,
    gt: Sequence[TranscriptSegment],
    slices: tuple[tuple[str, str], ...] = (),
    tolerance_s: float = BOX_TOLERANCE_S,
) -> ScoreRecord:
    pred = list(pred or [])
    m = match_segments(gt, pred)
    w = corpus_wer(m, gt, pred)
    b = match_boxes(m, gt, pred, tolerance_s)
    metrics = {
        "tiou_sum": math.fsum(iou for _, _, iou in m.pairs),
        "n_match": float(len(m.pairs)),
        "wer_s": float(w.substitutions),
        "wer_d": float(w.deletions),
        "wer_i": float(w.insertions),
        "wer_n": float(w.n_ref),
        "siou_sum": b.iou_sum,
        "n_box": float(b.n_box),
        "n_gt_box": float(b.n_gt_boxes),
    }
    return ScoreRecord(query_id, "char", metrics, slices, bool(pred))


def pool_char(records: Sequence[ScoreRecord]) -> dict[str, float | None]:
    """Pool sums over queries: matched pairs, words and boxes each count once."""
    tot = {k: math.fsum(r.metrics[k] for r in records) for k in CHAR_SUMS}
    edits = tot["wer_s"] + tot["wer_d"] + tot["wer_i"]
    if tot["wer_n"] > 0:
        wer: float | None = edits / tot["wer_n"]
    else:
        wer = float(tot["wer_i"]) if tot["wer_i"] > 0 else None
    return {
        "t_iou": tot["tiou_sum"] / tot["n_match"] if tot["n_match"] else 0.0,
        "wer": wer,
        "s_iou": tot["siou_sum"] / tot["n_box"] if tot["n_box"] else 0.0,
        "box_coverage": tot["n_box"] / tot["n_gt_box"] if tot["n_gt_box"] else None,
        "n_match": tot["n_match"],
    }


def aggregate_char(records: Iterable[ScoreRecord], slicer=None) -> SliceTable:
    table: SliceTable = {}
    for dim, buckets in group_records(records, slicer).items():
        table[dim] = {
            b: SliceRow(len(recs), pool_char(recs)) for b, recs in buckets.items()
        }
    return table


def score_mc(item: McItem, slices: tuple[tuple[str, str], ...] = ()) -> ScoreRecord:
    return ScoreRecord(
        item.question_id,
        "mc",
        {"accuracy": 1.0 if item.correct else 0.0},
        slices,
        item.pred_answer is not None,
    )


def aggregate_mc(records: Iterable[ScoreRecord], slicer=None) -> SliceTable:
    """Micro accuracy per slice, plus the macro average over task types."""
    records = list(records)
    table: SliceTable = {}
    for dim, buckets in group_records(records, slicer).items():
        table[dim] = {}
        for bucket, recs in buckets.items():
            table[dim][bucket] = SliceRow(
                len(recs), {"accuracy": mean_present(r.metrics["accuracy"] for r in recs)}
            )
    types = table.get("task_type", {})
    macro = mean_present(row.metrics["accuracy"] for row in types.values()) if types else None
    overall = table["overall"]["all"]
    table["overall"]["all"] = SliceRow(
        overall.n,
        {**overall.metrics, "accuracy_macro": macro if macro is not None else overall.metrics["accuracy"]},
    )
    return table
