"""Evaluation toolkit for video spatio-temporal grounding, temporal retrieval
and plot-understanding benchmarks."""

from .core import (
    BoundingBox,
    IntervalSet,
    ScoreRecord,
    TemporalSupport,
    Tube,
    TubeOverlapStats,
    box_iou,
    discretize,
    normalize_intervals,
    support_intersection,
    support_union,
)
from .evaluate import evaluate_run
from .report import RunReport, render
from .stg import (
    aggregate_stg,
    frame_iou,
    overlap_stats,
    spatiotemporal_scores,
    temporal_scores,
)
from .tr import auc, interval_scores, threshold_curve

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "IntervalSet",
    "RunReport",
    "ScoreRecord",
    "TemporalSupport",
    "Tube",
    "TubeOverlapStats",
    "aggregate_stg",
    "auc",
    "box_iou",
    "discretize",
    "evaluate_run",
    "frame_iou",
    "interval_scores",
    "normalize_intervals",
    "overlap_stats",
    "render",
    "spatiotemporal_scores",
    "support_intersection",
    "support_union",
    "temporal_scores",
    "threshold_curve",
]
