"""Temporal and spatio-temporal grounding scores for tube predictions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import (
    BoundingBox,
    ScoreRecord,
    SliceRow,
    SliceTable,
    Tube,
    TubeOverlapStats,
    box_iou,
    group_records,
    mean_present,
    support_intersection,
)
from .errors import ConfigurationError, InvalidAnnotationError

log = logging.getLogger(__name__)

STG_METRICS = ("t_p", "t_r", "t_iou", "v_p", "v_r", "v_iou", "v_iou_int")


@dataclass(frozen=True)
class TemporalScores:
    t_p: float
    t_r: float
    t_iou: float


@dataclass(frozen=True)
class SpatioTemporalScores:
    v_p: float
    v_r: float
    v_iou: float
    v_iou_int: float | None


def frame_iou(pred: Tube, gt: Tube, t: int) -> float:
    bp = pred.box_at(t)
    bg = gt.box_at(t)
    if bp is None or bg is None:
        return 0.0
    return box_iou(bp, bg)


def overlap_stats(pred: Tube, gt: Tube) -> TubeOverlapStats:
    if pred.support.sampling_rate != gt.support.sampling_rate:
        raise ConfigurationError("tubes sampled at different rates")
    inter = support_intersection(pred.support, gt.support)
    s_sum = math.fsum(box_iou(pred.box_at(t), gt.box_at(t)) for t in inter)
    n_inter = len(inter)
    n_pred, n_gt = len(pred), len(gt)
    return TubeOverlapStats(
        s_sum=s_sum,
        n_inter=n_inter,
        n_union=n_pred + n_gt - n_inter,
        n_pred=n_pred,
        n_gt=n_gt,
    )


def _require_gt(stats: TubeOverlapStats) -> None:
    if stats.n_gt < 1:
        raise InvalidAnnotationError("ground-truth tube is empty")


def temporal_scores(stats: TubeOverlapStats) -> TemporalScores:
    _require_gt(stats)
    t_p = stats.n_inter / stats.n_pred if stats.n_pred else 0.0
    return TemporalScores(
        t_p=t_p,
        t_r=stats.n_inter / stats.n_gt,
        t_iou=stats.n_inter / stats.n_union,
    )


def spatiotemporal_scores(stats: TubeOverlapStats) -> SpatioTemporalScores:
    _require_gt(stats)
    s = stats.s_sum
    return SpatioTemporalScores(
        v_p=s / stats.n_pred if stats.n_pred else 0.0,
        v_r=s / stats.n_gt,
        v_iou=s / stats.n_union,
        v_iou_int=s / stats.n_inter if stats.n_inter else None,
    )


def merge_tubes(tubes: Sequence[Tube], warnings: list[str] | None = None) -> Tube:
    """Combine several predicted tubes into one.

    On a timestamp claimed by more than one tube the larger box wins.
    """
    if len(tubes) == 1:
        return tubes[0]
    merged: dict[int, BoundingBox] = {}
    for tube in tubes:
        for t, box in tube.items():
            cur = merged.get(t)
            if cur is None:
                merged[t] = box
                continue
            if warnings is not None:
                warnings.append(f"duplicate box at t={t}s; kept the larger one")
            if box.area > cur.area:
                merged[t] = box
    return Tube.from_mapping(merged)


def score_stg(
    query_id: str,
    pred: Tube | None,
    gt: Tube,
    slices: tuple[tuple[str, str], ...] = (),
) -> ScoreRecord:
    """Score one query.  An empty or missing prediction keeps precision-type
    metrics undefined so they drop out of the predicted-tube averages."""
    if gt.is_empty:
        raise InvalidAnnotationError(f"ground-truth tube of {query_id!r} is empty")
    pred = pred if pred is not None else Tube()
    stats = overlap_stats(pred, gt)
    ts = temporal_scores(stats)
    vs = spatiotemporal_scores(stats)
    has_pred = not pred.is_empty
    metrics = {
        "t_p": ts.t_p if has_pred else None,
        "t_r": ts.t_r,
        "t_iou": ts.t_iou,
        "v_p": vs.v_p if has_pred else None,
        "v_r": vs.v_r,
        "v_iou": vs.v_iou,
        "v_iou_int": vs.v_iou_int,
    }
    return ScoreRecord(query_id, "stg", metrics, slices, has_pred)


def aggregate_stg(records: Iterable[ScoreRecord], slicer=None) -> SliceTable:
    """Sample-wise means per slice.

    Recall and IoU average over every ground-truth tube; precision only over
    queries that produced a tube; vIoU-Int only over predictions overlapping
    the ground truth.  An empty selection yields ``None`` (rendered N/A).
    """
    table: SliceTable = {}
    for dim, buckets in group_records(records, slicer).items():
        table[dim] = {}
        for bucket, recs in buckets.items():
            table[dim][bucket] = SliceRow(
                n=len(recs),
                metrics={m: mean_present(r.metrics.get(m) for r in recs) for m in STG_METRICS},
            )
    return table
