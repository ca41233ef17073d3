"""Slow, obviously-correct reference implementations used only by the tests."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

# -- STG: per-second loop ------------------------------------------------------


def _box_iou(a, b):
    # a, b: [x0, y0, x1, y1] lists
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def brute_force_stg(pred: dict, gt: dict, horizon: int = 121) -> dict:
    """All seven STG scores by walking every second of the horizon.

    ``pred`` and ``gt`` map integer seconds to box lists.
    """
    n_pred = n_gt = n_inter = n_union = 0
    frame_ious = []
    for t in range(horizon):
        in_p, in_g = t in pred, t in gt
        n_pred += in_p
        n_gt += in_g
        n_inter += in_p and in_g
        n_union += in_p or in_g
        if in_p and in_g:
            frame_ious.append(_box_iou(pred[t], gt[t]))
    s = math.fsum(frame_ious)
    return {
        "t_p": n_inter / n_pred if n_pred else 0.0,
        "t_r": n_inter / n_gt,
        "t_iou": n_inter / n_union,
        "v_p": s / n_pred if n_pred else 0.0,
        "v_r": s / n_gt,
        "v_iou": s / n_union,
        "v_iou_int": s / n_inter if n_inter else None,
    }


# -- segment matching: exhaustive search -------------------------------------


def _seg_iou(a, b):
    inter = min(a[1], b[1]) - max(a[0], b[0])
    if inter <= 0:
        return 0.0
    union = (a[1] - a[0]) + (b[1] - b[0]) - inter
    return inter / union if union > 0 else 0.0


def exhaustive_matching(gt: list, pred: list, tol: float = 1e-9):
    """Enumerate every partial one-to-one matching over positive-IoU pairs.

    Returns the optimal pairs as ``(gt_index, pred_index)`` tuples, choosing,
    among optimal matchings, the lexicographically smallest list of pairs in
    (start, end, index) rank order.
    """
    g_rank = sorted(range(len(gt)), key=lambda i: (gt[i][0], gt[i][1], i))
    p_rank = sorted(range(len(pred)), key=lambda i: (pred[i][0], pred[i][1], i))
    w = [[_seg_iou(gt[g], pred[p]) for p in p_rank] for g in g_rank]

    found = []

    def rec(g, used, chosen):
        if g == len(gt):
            found.append(list(chosen))
            return
        rec(g + 1, used, chosen)
        for p in range(len(pred)):
            if p not in used and w[g][p] > 0:
                chosen.append((g, p))
                rec(g + 1, used | {p}, chosen)
                chosen.pop()

    rec(0, frozenset(), [])
    totals = [math.fsum(w[g][p] for g, p in m) for m in found]
    best = max(totals)
    optimal = [m for m, t in zip(found, totals) if t >= best - tol]
    winner = min(optimal)
    return sorted((g_rank[g], p_rank[p]) for g, p in winner), best


# -- edit distance ---------------------------------------------------------------


def edit_distance(ref: tuple, hyp: tuple) -> int:
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            d(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1]),
            d(i - 1, j) + 1,
            d(i, j - 1) + 1,
        )

    return d(len(ref), len(hyp))


# -- step-function integral ----------------------------------------------------


def exact_curve_area(values) -> Fraction:
    """Exact area under tau -> fraction of values >= tau (values > 0) on [0, 1]."""
    vals = [Fraction(v) for v in values]
    return sum(vals, Fraction(0)) / len(vals)
