import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from sar_atr.evaluation import (
    BinaryCounts, MetricSet, class_counts, confusion, cross_validate, metrics_from_counts,
    multiclass_metrics, stratified_kfold, summarize,
)
from sar_atr.svm import TrainConfig


class TestConfusion:
    def test_perfect(self):
        np.testing.assert_array_equal(confusion([0, 1], [0, 1], 2), np.eye(2))

    def test_off_diagonal(self):
        assert confusion([0, 0], [1, 1], 2)[0, 1] == 2

    def test_against_tally(self):
        rng = np.random.default_rng(0)
        a, p = rng.integers(0, 5, 500), rng.integers(0, 5, 500)
        np.testing.assert_array_equal(confusion(a, p, 5), oracles.tally(a, p, 5))

    @pytest.mark.parametrize("a,p", [([0, 1], [0]), ([0, 3], [0, 1]), ([-1], [0])])
    def test_errors(self, a, p):
        with pytest.raises(ValueError):
            confusion(a, p, 3)


class TestClassCounts:
    def test_diagonal(self):
        for c in range(3):
            b = class_counts(np.diag([3, 4, 5]), c)
            assert b.fp == 0 and b.fn == 0

    def test_single_cell(self):
        cm = np.array([[0, 2], [0, 0]])
        assert class_counts(cm, 0) == BinaryCounts(tp=0, tn=0, fp=0, fn=2)

    def test_against_sample_recount(self):
        rng = np.random.default_rng(1)
        a, p = rng.integers(0, 4, 300), rng.integers(0, 4, 300)
        cm = confusion(a, p, 4)
        for c in range(4):
            expect = BinaryCounts(
                tp=int(np.sum((a == c) & (p == c))), tn=int(np.sum((a != c) & (p != c))),
                fp=int(np.sum((a != c) & (p == c))), fn=int(np.sum((a == c) & (p != c))))
            assert class_counts(cm, c) == expect


class TestMetricsFromCounts:
    def test_worked_example(self):
        m = metrics_from_counts(BinaryCounts(tp=50, tn=40, fp=5, fn=5))
        assert m.acc == pytest.approx(0.9, abs=1e-15)
        assert m.sen == pytest.approx(50 / 55, abs=1e-15)
        assert m.spe == pytest.approx(40 / 45, abs=1e-15)
        assert m.pre == pytest.approx(50 / 55, abs=1e-15)
        assert m.f1 == pytest.approx(100 / 110, abs=1e-15)
        assert m.mcc == pytest.approx(1975 / 2475, abs=1e-15)
        assert round(m.mcc, 5) == 0.79798

    def test_perfect(self):
        m = metrics_from_counts(BinaryCounts(7, 9, 0, 0))
        assert m.as_array().tolist() == [1.0] * 6

    def test_all_wrong(self):
        m = metrics_from_counts(BinaryCounts(0, 0, 4, 4))
        assert m.acc == 0 and m.mcc == -1

    def test_zero_counts(self):
        with pytest.raises(ValueError):
            metrics_from_counts(BinaryCounts(0, 0, 0, 0))

    def test_zero_denominators(self):
        m = metrics_from_counts(BinaryCounts(0, 5, 0, 0))
        assert (m.sen, m.pre, m.f1, m.mcc) == (0, 0, 0, 0)
        assert m.spe == 1 and m.acc == 1

    @given(st.integers(0, 60), st.integers(0, 60), st.integers(0, 60), st.integers(0, 60))
    @settings(max_examples=300, deadline=None)
    def test_mcc_range_and_unity(self, tp, tn, fp, fn):
        if tp + tn + fp + fn == 0:
            return
        m = metrics_from_counts(BinaryCounts(tp, tn, fp, fn))
        assert -1 <= m.mcc <= 1
        assert (m.mcc == 1) == (fp == 0 and fn == 0 and tp > 0 and tn > 0)


class TestMulticlass:
    def test_diagonal(self):
        assert multiclass_metrics(np.diag([5, 6, 7])).as_array().tolist() == [1.0] * 6

    def test_two_class_sen_is_mean_recall(self):
        cm = np.array([[40, 10], [5, 45]])
        m = multiclass_metrics(cm)
        assert m.sen == pytest.approx((40 / 50 + 45 / 50) / 2, abs=1e-15)
        assert m.acc == 0.85

    def test_two_class_duality(self):
        cm = np.array([[33, 7], [12, 48]])
        swapped = cm[::-1, ::-1]
        assert multiclass_metrics(cm).sen == pytest.approx(multiclass_metrics(swapped).spe)
        assert multiclass_metrics(cm).spe == pytest.approx(multiclass_metrics(swapped).sen)

    def test_eight_class_against_loop(self):
        rng = np.random.default_rng(3)
        cm = rng.integers(0, 30, size=(8, 8)) + np.diag(rng.integers(50, 100, 8))
        per = []
        total = cm.sum()
        for c in range(8):
            tp = cm[c, c]
            fn = sum(cm[c, j] for j in range(8) if j != c)
            fp = sum(cm[i, c] for i in range(8) if i != c)
            per.append(oracles.eq_metrics(tp, total - tp - fn - fp, fp, fn))
        per = np.array(per)
        m = multiclass_metrics(cm)
        expected = [per[:, 0].mean(), per[:, 1].mean(), np.trace(cm) / total,
                    per[:, 3].mean(), per[:, 4].mean(), per[:, 5].mean()]
        np.testing.assert_allclose(m.as_array(), expected, rtol=0, atol=1e-12)

    def test_class_permutation_invariance(self):
        rng = np.random.default_rng(4)
        cm = rng.integers(0, 20, size=(6, 6))
        perm = rng.permutation(6)
        np.testing.assert_allclose(multiclass_metrics(cm).as_array(),
                                   multiclass_metrics(cm[np.ix_(perm, perm)]).as_array(),
                                   atol=1e-14)

    def test_empty(self):
        with pytest.raises(ValueError):
            multiclass_metrics(np.zeros((3, 3), int))


class TestStratifiedKFold:
    def test_exact_division(self):
        f = stratified_kfold([0] * 8, 4, 0)
        assert np.bincount(f.fold_of).tolist() == [2, 2, 2, 2]

    def test_btr60(self):
        counts = [274, 274, 195, 274, 274, 273, 274, 274]
        labels = np.repeat(np.arange(8), counts)
        f = stratified_kfold(labels, 4, 42)
        assert sorted(np.bincount(f.fold_of[labels == 2])) == [48, 49, 49, 49]

    def test_determinism(self):
        labels = np.repeat(np.arange(3), [10, 7, 9])
        a = stratified_kfold(labels, 4, 5).fold_of
        assert np.array_equal(a, stratified_kfold(labels, 4, 5).fold_of)
        assert not np.array_equal(a, stratified_kfold(labels, 4, 6).fold_of)

    def test_small_class(self):
        with pytest.raises(ValueError, match="fewer than k"):
            stratified_kfold([0, 0, 0, 0, 1, 1, 1], 4, 0)

    @given(st.lists(st.integers(4, 40), min_size=2, max_size=8), st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_balanced_partition(self, counts, seed):
        labels = np.repeat(np.arange(len(counts)), counts)
        f = stratified_kfold(labels, 4, seed)
        assert f.fold_of.min() >= 0 and f.fold_of.max() < 4
        for c in range(len(counts)):
            sizes = np.bincount(f.fold_of[labels == c], minlength=4)
            assert sizes.max() - sizes.min() <= 1
        assert np.ptp(np.bincount(f.fold_of, minlength=4)) <= 1


class TestSummarize:
    def test_table3_accuracy(self):
        folds = [MetricSet(0, 0, a / 100, 0, 0, 0) for a in (93.56, 95.83, 95.64, 96.02)]
        mean, std = summarize(folds)
        assert 100 * mean.acc == pytest.approx(95.2625, abs=1e-9)
        assert 100 * std.acc == pytest.approx(1.1456, abs=1e-4)

    def test_table3_sensitivity(self):
        folds = [MetricSet(s / 100, 0, 0, 0, 0, 0) for s in (93.01, 95.68, 95.50, 95.87)]
        mean, std = summarize(folds)
        assert 100 * mean.sen == pytest.approx(95.015, abs=1e-9)
        assert 100 * std.sen == pytest.approx(1.3452, abs=1e-4)

    def test_identical_folds(self):
        m = MetricSet(0.3, 0.9, 0.5, 0.4, 0.35, 0.2)
        _, std = summarize([m, m, m])
        assert std.as_array().tolist() == [0.0] * 6

    def test_needs_two(self):
        with pytest.raises(ValueError):
            summarize([MetricSet(1, 1, 1, 1, 1, 1)])

    @given(st.lists(st.lists(st.floats(0, 1), min_size=6, max_size=6), min_size=2, max_size=10))
    @settings(max_examples=60, deadline=None)
    def test_mean_within_range(self, rows):
        folds = [MetricSet.from_array(r) for r in rows]
        mean, std = summarize(folds)
        arr = np.array(rows)
        assert np.all(mean.as_array() >= arr.min(0) - 1e-12)
        assert np.all(mean.as_array() <= arr.max(0) + 1e-12)
        assert np.all(std.as_array() >= 0)


class TestCrossValidate:
    def test_separable_saturates(self):
        rng = np.random.default_rng(0)
        centres = np.array([(0, 0), (10, 0), (0, 10)])
        y = np.repeat(np.arange(3), 12)
        X = centres[y] + rng.normal(0, 0.5, size=(36, 2))
        s = cross_validate(X, y, 4, 42)
        assert len(s.per_fold) == 4
        assert s.mean.as_array().tolist() == [1.0] * 6
        assert s.std.as_array().tolist() == [0.0] * 6

    def test_folds_partition_samples(self):
        rng = np.random.default_rng(1)
        y = np.repeat(np.arange(8), 9)
        X = rng.normal(size=(72, 3)) + y[:, None]
        s = cross_validate(X, y, 4, 7)
        assert sum(cm.sum() for cm in s.confusions) == 72
        folds = stratified_kfold(y, 4, 7)
        for f, cm in enumerate(s.confusions):
            assert cm.sum() == folds.indices(f).size
            np.testing.assert_array_equal(cm.sum(1), np.bincount(y[folds.indices(f)], minlength=8))

    def test_information_free_features_give_majority_rate(self):
        counts = [20, 12, 8]
        y = np.repeat(np.arange(3), counts)
        X = np.ones((y.size, 4))
        s = cross_validate(X, y, 4, 3)
        # every fold holds 5/3/2 samples; the majority class wins every pair
        for m in s.per_fold:
            assert m.acc == pytest.approx(max(counts) / sum(counts), abs=1e-12)

    def test_parallel_folds_identical(self):
        rng = np.random.default_rng(2)
        y = np.repeat(np.arange(4), 10)
        X = rng.normal(size=(40, 3)) + y[:, None] * 0.8
        a = cross_validate(X, y, 4, 1, TrainConfig(), n_jobs=1)
        b = cross_validate(X, y, 4, 1, TrainConfig(), n_jobs=4)
        assert [m.as_array().tolist() for m in a.per_fold] == \
               [m.as_array().tolist() for m in b.per_fold]
