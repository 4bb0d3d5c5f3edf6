"""Gaussian-kernel soft-margin SVM trained with SMO, and a one-vs-one
multiclass estimator built on it.

The binary solver minimizes the standard dual

    f(a) = 1/2 a'Qa - e'a,   Q_ij = y_i y_j K(x_i, x_j),
    subject to  y'a = 0,  0 <= a_i <= C,

choosing at every step the pair that maximally violates the KKT conditions
and solving the two-variable subproblem in closed form.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted, validate_data

MODEL_MAGIC = "sar-atr-svm-model"
MODEL_VERSION = 1

_TAU = 1e-12


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    gamma: object = "scale"
    kkt_tol: float = 1e-3
    max_passes: int = 10_000

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if self.gamma != "scale" and not float(self.gamma) > 0:
            raise ValueError("gamma must be positive or 'scale'")
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")


@dataclass(frozen=True)
class BinarySvmModel:
    support_vectors: np.ndarray
    coeffs: np.ndarray  # alpha_i * y_i
    bias: float
    gamma: float
    converged: bool = True
    n_iter: int = 0


# --------------------------------------------------------------------------
# kernel
# --------------------------------------------------------------------------

def rbf(x, y, gamma) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    d = x - y
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_kernel_matrix(X, Y, gamma):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    return np.exp(-gamma * cdist(X, Y, "sqeuclidean"))


def resolve_gamma(X, gamma):
    """``"scale"`` -> 1 / (dim * mean per-dimension variance), or 1 / dim."""
    if gamma != "scale":
        return float(gamma)
    X = np.asarray(X, dtype=np.float64)
    dim = X.shape[1]
    var = X.var(axis=0).mean()
    return 1.0 / (dim * var) if var > 0 else 1.0 / dim


# --------------------------------------------------------------------------
# binary SMO
# --------------------------------------------------------------------------

def dual_objective(alpha, y, K):
    """Dual objective to *maximize*: sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def _solve_dual(K, y, C, tol, max_iter):
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)
    Kd = np.diag(K)
    for it in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        i = np.flatnonzero(up)[np.argmax(yg[up])]
        j = np.flatnonzero(low)[np.argmin(yg[low])]
        if yg[i] - yg[j] <= tol:
            return alpha, grad, True, it
        yi, yj = y[i], y[j]
        ai, aj = alpha[i], alpha[j]
        quad = max(Kd[i] + Kd[j] - 2.0 * K[i, j], _TAU)
        if yi != yj:
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0 and aj < 0:
                aj, ai = 0.0, diff
            elif diff <= 0 and ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0 and ai > C:
                ai, aj = C, C - diff
            elif diff <= 0 and aj > C:
                aj, ai = C, C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C and ai > C:
                ai, aj = C, total - C
            elif total <= C and aj < 0:
                aj, ai = 0.0, total
            if total > C and aj > C:
                aj, ai = C, total - C
            elif total <= C and ai < 0:
                ai, aj = 0.0, total
        dai, daj = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        grad += y * (K[:, i] * (yi * dai) + K[:, j] * (yj * daj))
    return alpha, grad, False, max_iter


def _bias(alpha, grad, y, C):
    yg = y * grad
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return -float(yg[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yg[ub_mask].min() if ub_mask.any() else np.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
    return -float((ub + lb) / 2)


def smo_train(X, y, cfg: TrainConfig = TrainConfig(), return_alpha=False):
    """Train a binary Gaussian SVM on labels in {-1, +1}.

    Stops when the maximal KKT violation falls to ``cfg.kkt_tol`` or after
    ``cfg.max_passes * n`` pair updates, whichever comes first.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("smo_train needs at least one row")
    if X.shape[0] != y.size:
        raise ValueError("rows and labels differ in length")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise ValueError("single-class input")
    gamma = resolve_gamma(X, cfg.gamma)
    K = rbf_kernel_matrix(X, X, gamma)
    n = y.size
    alpha, grad, converged, n_iter = _solve_dual(
        K, y, float(cfg.C), cfg.kkt_tol, cfg.max_passes * n)
    if not converged:
        warnings.warn(
            f"SMO stopped after {n_iter} updates without reaching kkt_tol={cfg.kkt_tol}",
            ConvergenceWarning, stacklevel=2)
    bias = _bias(alpha, grad, y, cfg.C)
    sv = alpha > 0
    model = BinarySvmModel(
        support_vectors=X[sv].copy(), coeffs=(alpha * y)[sv], bias=bias,
        gamma=gamma, converged=converged, n_iter=n_iter)
    if return_alpha:
        return model, alpha
    return model


def decision_value(m: BinarySvmModel, x):
    """Decision value for one row or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if m.support_vectors.shape[0] and X.shape[1] != m.support_vectors.shape[1]:
        raise ValueError(
            f"dimension mismatch: model has {m.support_vectors.shape[1]}, got {X.shape[1]}")
    if m.support_vectors.shape[0] == 0:
        out = np.full(X.shape[0], m.bias)
    else:
        out = rbf_kernel_matrix(X, m.support_vectors, m.gamma) @ m.coeffs + m.bias
    return float(out[0]) if single else out


# --------------------------------------------------------------------------
# estimators
# --------------------------------------------------------------------------

class Standardizer(TransformerMixin, BaseEstimator):
    """Per-column z-score with population std; zero-variance columns map to 0."""

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        if X.shape[0] < 2:
            raise ValueError("Standardizer needs at least 2 rows")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        safe = np.where(self.scale_ > 0, self.scale_, 1.0)
        Z = (X - self.mean_) / safe
        Z[:, self.scale_ == 0] = 0.0
        return Z


def _fit_pair(Z, y, a, b, cfg):
    mask = (y == a) | (y == b)
    yy = np.where(y[mask] == b, 1.0, -1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return smo_train(Z[mask], yy, cfg)


class GaussianSVC(ClassifierMixin, BaseEstimator):
    """One-vs-one ensemble of SMO-trained Gaussian SVMs on z-scored features.

    Parameters
    ----------
    C : float, default=1.0
        Box constraint of every binary problem.
    gamma : float or "scale", default="scale"
        RBF width. ``"scale"`` resolves per pair problem from its rows.
    tol : float, default=1e-3
        Maximal tolerated KKT violation.
    max_passes : int, default=10000
        Update budget per binary problem, in multiples of its sample count.
    n_jobs : int, default=None
        Pair problems trained in parallel through joblib. Results do not
        depend on this value.

    Attributes
    ----------
    classes_ : ndarray of shape (n_classes,)
    pairs_ : list of (int, int)
        Class-index pairs ``(0, 1), (0, 2), ..., (K-2, K-1)``.
    pair_models_ : list of BinarySvmModel
        For pair ``(a, b)`` class ``a`` is the negative side.
    standardizer_ : Standardizer
    converged_ : bool
        False if any pair problem exhausted its update budget.
    """

    def __init__(self, C=1.0, gamma="scale", tol=1e-3, max_passes=10_000, n_jobs=None):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes
        self.n_jobs = n_jobs

    def _config(self):
        return TrainConfig(C=self.C, gamma=self.gamma, kkt_tol=self.tol,
                           max_passes=self.max_passes)

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        cfg = self._config()
        self.classes_, yi = np.unique(y, return_inverse=True)
        k = self.classes_.size
        if k < 2:
            raise ValueError("need at least 2 classes")
        counts = np.bincount(yi, minlength=k)
        if counts.min() < 2:
            small = [str(c) for c, n in zip(self.classes_, counts) if n < 2]
            raise ValueError(f"classes with fewer than 2 samples: {small}")
        self.standardizer_ = Standardizer().fit(X)
        Z = self.standardizer_.transform(X)
        self.pairs_ = list(itertools.combinations(range(k), 2))
        self.pair_models_ = Parallel(n_jobs=self.n_jobs)(
            delayed(_fit_pair)(Z, yi, a, b, cfg) for a, b in self.pairs_)
        self.converged_ = all(m.converged for m in self.pair_models_)
        if not self.converged_:
            warnings.warn("one or more pair problems did not converge",
                          ConvergenceWarning, stacklevel=2)
        return self

    def decision_function(self, X):
        """Pair decision values, shape ``(n_samples, n_pairs)``."""
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        Z = self.standardizer_.transform(X)
        return np.column_stack([decision_value(m, Z) for m in self.pair_models_])

    def _vote(self, dec):
        k = self.classes_.size
        n = dec.shape[0]
        votes = np.zeros((n, k), dtype=np.int64)
        conf = np.zeros((n, k))
        rows = np.arange(n)
        for col, (a, b) in enumerate(self.pairs_):
            d = dec[:, col]
            winner = np.where(d > 0, b, a)
            np.add.at(votes, (rows, winner), 1)
            np.add.at(conf, (rows, winner), np.abs(d))
        # plurality, then summed |decision| of the winning votes, then lowest index
        best = np.empty(n, dtype=np.int64)
        for r in range(n):
            top = np.flatnonzero(votes[r] == votes[r].max())
            if top.size > 1:
                c = conf[r, top]
                top = top[c == c.max()]
            best[r] = top[0]
        return best

    def predict_index(self, X):
        return self._vote(self.decision_function(X))

    def predict(self, X):
        return self.classes_[self.predict_index(X)]


def train_multiclass(X, labels, cfg: TrainConfig = TrainConfig(), feature_names=None,
                     n_jobs=None) -> GaussianSVC:
    model = GaussianSVC(C=cfg.C, gamma=cfg.gamma, tol=cfg.kkt_tol,
                        max_passes=cfg.max_passes, n_jobs=n_jobs)
    model.fit(X, labels)
    if feature_names is not None:
        if len(feature_names) != model.n_features_in_:
            raise ValueError("feature_names length differs from feature dimension")
        model.feature_names_ = [str(n) for n in feature_names]
    return model


def predict(model: GaussianSVC, X):
    return model.predict(np.atleast_2d(X))


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------

def _fmt(v):
    return f"{float(v):.17g}"


def _line(*fields):
    return "\t".join(str(f) for f in fields)


def save_model(model: GaussianSVC, meta=None) -> bytes:
    """Serialize to line-oriented ASCII (tab-separated, 17 significant digits)."""
    check_is_fitted(model)
    names = getattr(model, "feature_names_", None)
    if names is None:
        names = [f"x{i}" for i in range(model.n_features_in_)]
    out = [_line(MODEL_MAGIC, MODEL_VERSION)]
    for key, val in (meta or {}).items():
        out.append(_line("meta", key, val))
    out.append(_line("params", _fmt(model.C), model.gamma, _fmt(model.tol), model.max_passes))
    kind = "int" if model.classes_.dtype.kind in "iu" else "str"
    out.append(_line("classes", len(model.classes_), kind))
    out += [str(c) for c in model.classes_]
    out.append(_line("features", len(names)))
    out += [str(n) for n in names]
    out.append(_line("mean", *map(_fmt, model.standardizer_.mean_)))
    out.append(_line("std", *map(_fmt, model.standardizer_.scale_)))
    out.append(_line("pairs", len(model.pairs_)))
    for (a, b), m in zip(model.pairs_, model.pair_models_):
        out.append(_line("pair", a, b))
        out.append(_line("gamma", _fmt(m.gamma)))
        out.append(_line("bias", _fmt(m.bias)))
        out.append(_line("nsv", len(m.coeffs)))
        for c, sv in zip(m.coeffs, m.support_vectors):
            out.append(_line(_fmt(c), *map(_fmt, sv)))
    out.append("end")
    return ("\n".join(out) + "\n").encode("utf-8")


class _Reader:
    def __init__(self, text):
        self.lines = text.split("\n")
        self.pos = 0

    def next(self):
        if self.pos >= len(self.lines) or (self.pos == len(self.lines) - 1 and not self.lines[-1]):
            raise ModelFormatError(f"truncated model payload at line {self.pos + 1}")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def keyed(self, key):
        fields = self.next().split("\t")
        if fields[0] != key:
            raise ModelFormatError(
                f"line {self.pos}: expected {key!r}, found {fields[0]!r}")
        return fields[1:]


def load_model(data) -> tuple:
    """Parse :func:`save_model` output; returns ``(model, meta)``."""
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else str(data)
    r = _Reader(text)
    head = r.next().split("\t")
    if head[0] != MODEL_MAGIC:
        raise ModelFormatError(f"not a model file (header {head[0]!r})")
    if len(head) < 2 or head[1] != str(MODEL_VERSION):
        raise ModelFormatError(
            f"unsupported model version {head[1] if len(head) > 1 else '?'}; "
            f"expected {MODEL_VERSION}")
    try:
        meta = {}
        fields = r.next().split("\t")
        while fields[0] == "meta":
            meta[fields[1]] = fields[2]
            fields = r.next().split("\t")
        if fields[0] != "params":
            raise ModelFormatError(f"line {r.pos}: expected 'params'")
        C, gamma, tol, passes = fields[1:5]
        gamma = gamma if gamma == "scale" else float(gamma)
        model = GaussianSVC(C=float(C), gamma=gamma, tol=float(tol), max_passes=int(passes))
        k, kind = r.keyed("classes")[:2]
        k = int(k)
        model.classes_ = np.array([r.next() for _ in range(k)])
        if kind == "int":
            model.classes_ = model.classes_.astype(np.int64)
        d = int(r.keyed("features")[0])
        model.feature_names_ = [r.next() for _ in range(d)]
        model.n_features_in_ = d
        std = Standardizer()
        std.mean_ = np.array(r.keyed("mean"), dtype=np.float64)
        std.scale_ = np.array(r.keyed("std"), dtype=np.float64)
        std.n_features_in_ = d
        if std.mean_.size != d or std.scale_.size != d:
            raise ModelFormatError("standardizer length differs from feature count")
        model.standardizer_ = std
        npairs = int(r.keyed("pairs")[0])
        pairs, models = [], []
        for _ in range(npairs):
            a, b = map(int, r.keyed("pair"))
            g = float(r.keyed("gamma")[0])
            bias = float(r.keyed("bias")[0])
            nsv = int(r.keyed("nsv")[0])
            rows = np.array([r.next().split("\t") for _ in range(nsv)], dtype=np.float64)
            rows = rows.reshape(nsv, d + 1)
            pairs.append((a, b))
            models.append(BinarySvmModel(rows[:, 1:].copy(), rows[:, 0].copy(), bias, g))
        if r.next() != "end":
            raise ModelFormatError("missing end marker")
    except ModelFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise ModelFormatError(f"malformed model near line {r.pos}: {exc}") from None
    if pairs != list(itertools.combinations(range(k), 2)):
        raise ModelFormatError("pair blocks do not cover every class pair in order")
    model.pairs_ = pairs
    model.pair_models_ = models
    model.converged_ = True
    return model, meta
