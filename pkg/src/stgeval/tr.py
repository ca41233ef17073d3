"""Temporal retrieval scoring: continuous interval overlap and AUC over thresholds."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    IntervalSet,
    ScoreRecord,
    SliceRow,
    SliceTable,
    group_records,
    intersection_measure,
    normalize_intervals,
)
from .errors import InvalidAnnotationError
from .stg import TemporalScores

METRIC_KINDS = ("iou", "precision", "recall")
AUC_NAMES = {"precision": "p_auc", "recall": "r_auc", "iou": "iou_auc"}

# exact i/100 so that a value such as 0.29 compares equal to its grid point
DEFAULT_GRID = tuple(i / 100 for i in range(101))


@dataclass(frozen=True)
class ThresholdCurve:
    thresholds: tuple[float, ...]
    accuracy: tuple[float, ...]
    metric_kind: str = "iou"


@dataclass(frozen=True)
class AucScores:
    p_bar: float
    r_bar: float
    iou_bar: float


def interval_scores(pred: IntervalSet, gt: IntervalSet) -> TemporalScores:
    """Precision, recall and IoU from exact real-valued measures.

    Both sets are normalized first, so order and interior splits do not matter.
    """
    gt = normalize_intervals(gt)
    if gt.is_empty:
        raise InvalidAnnotationError("ground-truth interval set is empty")
    pred = normalize_intervals(pred)
    if pred.is_empty:
        return TemporalScores(0.0, 0.0, 0.0)
    inter = intersection_measure(pred, gt)
    m_pred, m_gt = pred.measure(), gt.measure()
    union = m_pred + m_gt - inter
    return TemporalScores(
        t_p=inter / m_pred if m_pred > 0 else 0.0,
        t_r=inter / m_gt if m_gt > 0 else 0.0,
        t_iou=inter / union if union > 0 else 0.0,
    )


def threshold_curve(
    per_query: Sequence[float], grid: Sequence[float] = DEFAULT_GRID, metric_kind: str = "iou"
) -> ThresholdCurve:
    """Fraction of queries scoring at least each threshold.

    A query with value 0 never counts as a hit, so a curve built from no
    overlap at all is identically zero (including at threshold 0).
    """
    if len(per_query) == 0:
        raise ValueError("threshold curve needs at least one query")
    vals = np.asarray(per_query, dtype=float)
    if np.any((vals < 0) | (vals > 1)) or not np.all(np.isfinite(vals)):
        raise ValueError("per-query values must lie in [0, 1]")
    taus = np.asarray(grid, dtype=float)
    hits = (vals[None, :] >= taus[:, None]) & (vals[None, :] > 0)
    acc = hits.sum(axis=1) / len(vals)
    return ThresholdCurve(tuple(float(t) for t in taus), tuple(float(a) for a in acc), metric_kind)


def auc(curve: ThresholdCurve) -> float:
    """Trapezoidal area under the accuracy-vs-threshold curve."""
    x = curve.thresholds
    y = curve.accuracy
    if len(x) < 2:
        return float(y[0]) if y else 0.0
    steps = np.diff(x)
    if np.allclose(steps, steps[0], rtol=0, atol=1e-12):
        # uniform grid: avoid per-step rounding of the spacing
        area = (math.fsum(y) - (y[0] + y[-1]) / 2) * (x[-1] - x[0]) / (len(x) - 1)
    else:
        area = math.fsum(
            (x[i + 1] - x[i]) * (y[i] + y[i + 1]) / 2 for i in range(len(x) - 1)
        )
    return min(max(area, 0.0), 1.0)


def auc_scores(precision: Sequence[float], recall: Sequence[float], iou: Sequence[float]) -> AucScores:
    return AucScores(
        p_bar=auc(threshold_curve(precision, metric_kind="precision")),
        r_bar=auc(threshold_curve(recall, metric_kind="recall")),
        iou_bar=auc(threshold_curve(iou, metric_kind="iou")),
    )


def score_tr(
    query_id: str,
    pred: IntervalSet | None,
    gt: IntervalSet,
    slices: tuple[tuple[str, str], ...] = (),
) -> ScoreRecord:
    """Per-query P/R/IoU.  Precision stays undefined without a prediction so
    that it is averaged over answered queries only, like tube precision."""
    has_pred = pred is not None and not pred.is_empty
    s = interval_scores(pred if pred is not None else IntervalSet(), gt)
    metrics = {"precision": s.t_p if has_pred else None, "recall": s.t_r, "iou": s.t_iou}
    return ScoreRecord(query_id, "tr", metrics, slices, has_pred)


def curves_for(records: Sequence[ScoreRecord]) -> dict[str, ThresholdCurve]:
    """Curves per metric kind; a kind with no defined values is left out."""
    out = {}
    for kind in METRIC_KINDS:
        vals = [r.metrics[kind] for r in records if r.metrics.get(kind) is not None]
        if vals:
            out[kind] = threshold_curve(vals, metric_kind=kind)
    return out


def aggregate_tr(records: Iterable[ScoreRecord], slicer=None) -> SliceTable:
    """AUC of precision, recall and IoU per slice."""
    table: SliceTable = {}
    for dim, buckets in group_records(records, slicer).items():
        table[dim] = {}
        for bucket, recs in buckets.items():
            curves = curves_for(recs)
            table[dim][bucket] = SliceRow(
                n=len(recs),
                metrics={
                    AUC_NAMES[k]: auc(curves[k]) if k in curves else None
                    for k in ("precision", "recall", "iou")
                },
            )
    return table


def curves_to_csv(curves: Iterable[ThresholdCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "accuracy", "metric_kind"])
    for c in curves:
        for t, a in zip(c.thresholds, c.accuracy):
            w.writerow([f"{t:.2f}", repr(a), c.metric_kind])
    return buf.getvalue()
