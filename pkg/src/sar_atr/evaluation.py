"""Confusion matrices, one-vs-rest metrics, stratified k-fold CV and the
mean/std fold summary."""

from __future__ import annotations

import math
import statistics
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from joblib import Parallel, delayed
from sklearn.exceptions import ConvergenceWarning

from .svm import GaussianSVC, TrainConfig

METRIC_NAMES = ("SEN", "SPE", "ACC", "PRE", "F1", "MCC")


class BinaryCounts(NamedTuple):
    tp: int
    tn: int
    fp: int
    fn: int


@dataclass(frozen=True)
class MetricSet:
    sen: float
    spe: float
    acc: float
    pre: float
    f1: float
    mcc: float

    def as_array(self):
        return np.array([self.sen, self.spe, self.acc, self.pre, self.f1, self.mcc])

    @classmethod
    def from_array(cls, values):
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: np.ndarray

    def indices(self, fold):
        return np.flatnonzero(self.fold_of == fold)


@dataclass
class CvSummary:
    per_fold: list
    mean: MetricSet
    std: MetricSet
    confusions: list = field(default_factory=list)
    seed: int | None = None
    converged: bool = True


def confusion(actual, predicted, k) -> np.ndarray:
    """``k`` x ``k`` counts; rows are actual classes, columns predictions."""
    a = np.asarray(actual, dtype=np.int64).ravel()
    p = np.asarray(predicted, dtype=np.int64).ravel()
    if a.size != p.size:
        raise ValueError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    for name, v in (("actual", a), ("predicted", p)):
        if v.size and (v.min() < 0 or v.max() >= k):
            raise ValueError(f"{name} label outside [0, {k})")
    return np.bincount(a * k + p, minlength=k * k).reshape(k, k)


def class_counts(cm, c) -> BinaryCounts:
    """One-vs-rest reduction of a confusion matrix for class ``c``."""
    cm = np.asarray(cm)
    if not 0 <= c < cm.shape[0]:
        raise ValueError(f"class {c} outside [0, {cm.shape[0]})")
    tp = int(cm[c, c])
    fn = int(cm[c].sum()) - tp
    fp = int(cm[:, c].sum()) - tp
    tn = int(cm.sum()) - tp - fn - fp
    return BinaryCounts(tp, tn, fp, fn)


def _ratio(num, den):
    return num / den if den else 0.0


def metrics_from_counts(b: BinaryCounts) -> MetricSet:
    """Accuracy, sensitivity, specificity, precision, F1 and MCC; 0/0 -> 0."""
    tp, tn, fp, fn = (int(v) for v in b)
    if tp + tn + fp + fn < 1:
        raise ValueError("all-zero counts")
    acc = _ratio(tp + tn, tp + fn + tn + fp)
    sen = _ratio(tp, tp + fn)
    spe = _ratio(tn, tn + fp)
    pre = _ratio(tp, tp + fp)
    f1 = _ratio(2 * tp, 2 * tp + fn + fp)
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(den) if den else 0.0
    return MetricSet(sen=sen, spe=spe, acc=acc, pre=pre, f1=f1, mcc=mcc)


def multiclass_metrics(cm) -> MetricSet:
    """Overall accuracy plus macro-averaged one-vs-rest SEN/SPE/PRE/F1/MCC."""
    cm = np.asarray(cm)
    k = cm.shape[0]
    if k < 2:
        raise ValueError("need at least 2 classes")
    total = int(cm.sum())
    if total == 0:
        raise ValueError("empty confusion matrix")
    per_class = np.array([metrics_from_counts(class_counts(cm, c)).as_array()
                          for c in range(k)])
    macro = per_class.mean(axis=0)
    return MetricSet(sen=macro[0], spe=macro[1], acc=float(np.trace(cm)) / total,
                     pre=macro[3], f1=macro[4], mcc=macro[5])


def stratified_kfold(labels, k=4, seed=42) -> FoldAssignment:
    """Seeded per-class shuffle, then round-robin dealing into ``k`` folds.

    The dealing position carries over from one class to the next so that the
    overall fold sizes also stay within one of each other.
    """
    y = np.asarray(labels).ravel()
    if k < 2:
        raise ValueError("k must be >= 2")
    classes, counts = np.unique(y, return_counts=True)
    small = classes[counts < k]
    if small.size:
        raise ValueError(f"classes with fewer than k={k} samples: {small.tolist()}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.size, dtype=np.int64)
    start = 0
    for c in classes:
        idx = rng.permutation(np.flatnonzero(y == c))
        fold_of[idx] = (start + np.arange(idx.size)) % k
        start = (start + idx.size) % k
    return FoldAssignment(k, fold_of)


class StratifiedRoundRobinKFold:
    """scikit-learn style splitter over :func:`stratified_kfold`."""

    def __init__(self, n_splits=4, seed=42):
        self.n_splits = n_splits
        self.seed = seed

    def get_n_splits(self, X=None, y=None, groups=None):
        return self.n_splits

    def split(self, X, y, groups=None):
        folds = stratified_kfold(y, self.n_splits, self.seed)
        for f in range(self.n_splits):
            test = folds.indices(f)
            yield np.flatnonzero(folds.fold_of != f), test


def summarize(per_fold):
    """Element-wise mean and sample (n - 1) standard deviation."""
    if len(per_fold) < 2:
        raise ValueError("summarize needs at least 2 folds")
    # statistics works in exact rationals, so identical folds give std 0
    cols = np.array([m.as_array() for m in per_fold]).T.tolist()
    mean = [statistics.fmean(c) for c in cols]
    std = [statistics.stdev(c) for c in cols]
    return MetricSet.from_array(mean), MetricSet.from_array(std)


def _run_fold(X, y, n_classes, train, test, cfg):
    clf = GaussianSVC(C=cfg.C, gamma=cfg.gamma, tol=cfg.kkt_tol, max_passes=cfg.max_passes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        clf.fit(X[train], y[train])
    pred = clf.predict(X[test])
    cm = confusion(y[test], pred, n_classes)
    return cm, clf.converged_


def cross_validate(X, labels, k=4, seed=42, cfg: TrainConfig = TrainConfig(),
                   n_jobs=None) -> CvSummary:
    """Stratified k-fold CV of :class:`GaussianSVC`.

    ``labels`` are 0-based class indices. Each fold's standardizer and pair
    models see only that fold's training split. ``n_jobs`` parallelizes over
    folds and never changes the result.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).ravel()
    if X.shape[0] != y.size:
        raise ValueError("features and labels differ in length")
    n_classes = int(y.max()) + 1
    folds = stratified_kfold(y, k, seed)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_run_fold)(X, y, n_classes, np.flatnonzero(folds.fold_of != f),
                           folds.indices(f), cfg)
        for f in range(k))
    confusions = [cm for cm, _ in results]
    per_fold = [multiclass_metrics(cm) for cm in confusions]
    mean, std = summarize(per_fold)
    return CvSummary(per_fold, mean, std, confusions, seed,
                     converged=all(ok for _, ok in results))
