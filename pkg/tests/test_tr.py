import pytest
from hypothesis import given, strategies as st

from oracles import exact_curve_area
from stgeval.core import IntervalSet, normalize_intervals
from stgeval.errors import InvalidAnnotationError
from stgeval.tr import (
    DEFAULT_GRID,
    ThresholdCurve,
    aggregate_tr,
    auc,
    curves_to_csv,
    interval_scores,
    score_tr,
    threshold_curve,
)

GRID_ERR = 0.005
# float slack on top of the grid error bound: 0.505 - 0.5 is 0.0050000000000000044
FP = 1e-12


def iv(*pairs):
    return normalize_intervals(pairs)


class TestIntervalScores:
    def test_half_overlap(self):
        s = interval_scores(iv((10, 20)), iv((15, 25)))
        assert (s.t_p, s.t_r) == (0.5, 0.5)
        assert s.t_iou == 1 / 3

    def test_identity(self):
        s = interval_scores(iv((1.5, 9.25), (30, 31)), iv((1.5, 9.25), (30, 31)))
        assert (s.t_p, s.t_r, s.t_iou) == (1, 1, 1)

    def test_extra_range_halves_precision(self):
        s = interval_scores(iv((0, 5), (30, 35)), iv((30, 35)))
        assert (s.t_p, s.t_r, s.t_iou) == (0.5, 1.0, 0.5)

    def test_empty_prediction(self):
        s = interval_scores(IntervalSet(), iv((0, 1)))
        assert (s.t_p, s.t_r, s.t_iou) == (0, 0, 0)

    def test_empty_gt(self):
        with pytest.raises(InvalidAnnotationError):
            interval_scores(iv((0, 1)), IntervalSet())


ranges = st.lists(
    st.tuples(st.integers(0, 100), st.integers(0, 20)).map(lambda p: (p[0], p[0] + p[1])),
    min_size=1,
    max_size=5,
)


@given(ranges, ranges, st.randoms())
def test_interval_scores_invariant_to_order_and_splits(pred, gt, r):
    base = interval_scores(iv(*pred), iv(*gt))
    shuffled = list(pred)
    r.shuffle(shuffled)
    # split the first range at an interior point
    s, e = shuffled[0]
    if e - s >= 2:
        mid = s + (e - s) / 2
        shuffled = [(s, mid), (mid, e)] + shuffled[1:]
    other = interval_scores(IntervalSet(tuple(shuffled)), iv(*gt))
    assert other.t_p == pytest.approx(base.t_p, abs=1e-12)
    assert other.t_r == pytest.approx(base.t_r, abs=1e-12)
    assert other.t_iou == pytest.approx(base.t_iou, abs=1e-12)


class TestThresholdCurve:
    def test_all_ones(self):
        c = threshold_curve([1.0])
        assert set(c.accuracy) == {1.0}
        assert len(c.thresholds) == 101

    def test_single_half(self):
        c = threshold_curve([0.5])
        for t, a in zip(c.thresholds, c.accuracy):
            assert a == (1.0 if t <= 0.5 else 0.0)

    def test_two_values(self):
        c = threshold_curve([0.2, 0.8])
        assert c.accuracy[DEFAULT_GRID.index(0.5)] == 0.5

    def test_grid_values_compare_equal(self):
        c = threshold_curve([0.29])
        assert c.accuracy[29] == 1.0 and c.accuracy[30] == 0.0

    def test_zero_is_never_a_hit(self):
        assert set(threshold_curve([0.0, 0.0]).accuracy) == {0.0}

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            threshold_curve([])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            threshold_curve([1.2])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20))
def test_curve_non_increasing(vals):
    acc = threshold_curve(vals).accuracy
    assert all(a >= b for a, b in zip(acc, acc[1:]))


class TestAuc:
    def test_all_ones(self):
        assert auc(threshold_curve([1.0, 1.0])) == 1.0

    @pytest.mark.parametrize("v", [0.0, 0.25, 0.5, 1.0])
    def test_single_value(self, v):
        assert abs(auc(threshold_curve([v])) - v) <= GRID_ERR + FP

    def test_zero_and_one(self):
        assert abs(auc(threshold_curve([0.0, 1.0])) - 0.5) <= GRID_ERR + FP

    def test_nonuniform_grid(self):
        c = ThresholdCurve((0.0, 0.5, 1.0), (1.0, 1.0, 0.0))
        assert auc(c) == pytest.approx(0.75)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
def test_auc_close_to_exact_area(vals):
    # exact step-function area equals the mean of the values
    exact = float(exact_curve_area(vals))
    assert abs(auc(threshold_curve(vals)) - exact) <= 0.01


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.data())
def test_auc_monotone(vals, data):
    i = data.draw(st.integers(0, len(vals) - 1))
    bumped = list(vals)
    bumped[i] = data.draw(st.floats(vals[i], 1))
    assert auc(threshold_curve(bumped)) >= auc(threshold_curve(vals))


def test_aggregate_tr_identity_and_empty():
    gt = iv((3, 9))
    ident = [score_tr(f"q{i}", gt, gt) for i in range(3)]
    m = aggregate_tr(ident)["overall"]["all"].metrics
    assert m == {"p_auc": 1.0, "r_auc": 1.0, "iou_auc": 1.0}
    empty = [score_tr(f"q{i}", None, gt) for i in range(3)]
    m = aggregate_tr(empty)["overall"]["all"].metrics
    assert m == {"p_auc": None, "r_auc": 0.0, "iou_auc": 0.0}


def test_curves_csv_rows():
    text = curves_to_csv([threshold_curve([0.3], metric_kind=k) for k in ("iou", "precision", "recall")])
    lines = text.strip().splitlines()
    assert lines[0] == "threshold,accuracy,metric_kind"
    assert len(lines) == 1 + 3 * 101
    assert sum(l.endswith(",iou") for l in lines) == 101
