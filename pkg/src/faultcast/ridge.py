"""Ridge binary classifier on standardized learned features.

Labels are encoded as {-1, +1} targets for an L2-regularized least-squares
fit.  Columns are standardized with training statistics (zero-variance
columns are centered only).  The solver picks the primal normal equations
when F <= N and the dual (Gram) formulation otherwise; both are exposed for
cross-checks.
"""

from __future__ import annotations

import json
import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .folds import assign_machines
from .metrics import compute_metrics

ALPHA_GRID_DEFAULT = tuple(10.0 ** np.arange(-3, 4))  # decades over [1e-3, 1e3]


def _standardize_stats(x, sample_weight=None):
    if sample_weight is None:
        mean = x.mean(axis=0)
        std = x.std(axis=0)
    else:
        w = sample_weight / sample_weight.sum()
        mean = w @ x
        std = np.sqrt(w @ (x - mean) ** 2)
    # constant columns (up to rounding noise) are centered only
    tol = 1e-12 * np.maximum(1.0, np.abs(mean))
    scale = np.where(std > tol, std, 1.0)
    return mean, scale


def _solve_ridge(xs, yc, alpha, mode="auto"):
    n, f = xs.shape
    if mode == "auto":
        mode = "primal" if f <= n else "dual"
    if mode == "primal":
        gram = xs.T @ xs
        gram[np.diag_indices_from(gram)] += alpha
        return np.linalg.solve(gram, xs.T @ yc)
    if mode == "dual":
        k = xs @ xs.T
        k[np.diag_indices_from(k)] += alpha
        return xs.T @ np.linalg.solve(k, yc)
    raise ValueError(f"bad solver mode {mode!r}")


class RidgeFailureClassifier(BaseEstimator, ClassifierMixin):
    """L2-regularized least-squares binary classifier.

    Parameters
    ----------
    alpha : float
        Regularization strength, > 0.
    balanced : bool
        Weight samples by inverse class frequency in the least-squares
        objective.
    solver : str
        "auto", "primal" or "dual".
    """

    def __init__(self, alpha=1.0, balanced=False, solver="auto"):
        self.alpha = alpha
        self.balanced = balanced
        self.solver = solver

    def fit(self, X, y, sample_weight=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (n_samples, n_features) aligned with y")
        if X.shape[0] < 2:
            raise ValueError("need at least two training samples")
        if not np.isfinite(X).all():
            raise ValueError("non-finite feature values")
        classes = np.unique(y)
        if not np.isin(classes, (0, 1)).all() or len(classes) < 2:
            raise ValueError("y must contain both classes 0 and 1")

        target = np.where(y == 1, 1.0, -1.0)
        if sample_weight is None and self.balanced:
            counts = np.bincount(y.astype(int), minlength=2)
            sample_weight = np.where(
                y == 1, len(y) / (2 * counts[1]), len(y) / (2 * counts[0])
            )
        if sample_weight is not None:
            sample_weight = np.asarray(sample_weight, dtype=np.float64)

        self.mean_, self.scale_ = _standardize_stats(X, sample_weight)
        xs = (X - self.mean_) / self.scale_
        if sample_weight is None:
            y_mean = target.mean()
            yc = target - y_mean
        else:
            y_mean = (sample_weight @ target) / sample_weight.sum()
            yc = target - y_mean
            sw = np.sqrt(sample_weight)
            xs = xs * sw[:, None]
            yc = yc * sw
        self.coef_ = _solve_ridge(xs, yc, self.alpha, self.solver)
        self.intercept_ = float(y_mean)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape}"
            )
        xs = (X - self.mean_) / self.scale_
        return xs @ self.coef_ + self.intercept_

    def predict(self, X):
        # score exactly 0 maps to the negative class
        return (self.decision_function(X) > 0).astype(np.int64)

    def to_json(self) -> str:
        payload = {
            "alpha": self.alpha,
            "balanced": self.balanced,
            "solver": self.solver,
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "RidgeFailureClassifier":
        payload = json.loads(text)
        model = cls(
            alpha=payload["alpha"],
            balanced=payload["balanced"],
            solver=payload["solver"],
        )
        model.mean_ = np.array(payload["mean"], dtype=np.float64)
        model.scale_ = np.array(payload["scale"], dtype=np.float64)
        model.coef_ = np.array(payload["coef"], dtype=np.float64)
        model.intercept_ = float(payload["intercept"])
        model.n_features_in_ = len(model.coef_)
        return model


def fit_ridge_path(X, y, alphas, balanced=False):
    """Fit one model per alpha, sharing the eigendecomposition.

    Standardization and the covariance (or Gram) eigendecomposition are
    computed once, so sweeping the alpha grid costs little more than a
    single fit.  Returns a list of fitted classifiers aligned with
    ``alphas``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    alphas = [float(a) for a in alphas]
    if any(a <= 0 for a in alphas):
        raise ValueError("alpha must be positive")
    if not np.isfinite(X).all():
        raise ValueError("non-finite feature values")
    classes = np.unique(y)
    if not np.isin(classes, (0, 1)).all() or len(classes) < 2:
        raise ValueError("y must contain both classes 0 and 1")

    target = np.where(y == 1, 1.0, -1.0)
    sample_weight = None
    if balanced:
        counts = np.bincount(y.astype(int), minlength=2)
        sample_weight = np.where(
            y == 1, len(y) / (2 * counts[1]), len(y) / (2 * counts[0])
        )
    mean, scale = _standardize_stats(X, sample_weight)
    xs = (X - mean) / scale
    if sample_weight is None:
        y_mean = target.mean()
        yc = target - y_mean
    else:
        y_mean = (sample_weight @ target) / sample_weight.sum()
        yc = (target - y_mean) * np.sqrt(sample_weight)
        xs = xs * np.sqrt(sample_weight)[:, None]

    n, f = xs.shape
    models = []
    if f <= n:
        evals, evecs = np.linalg.eigh(xs.T @ xs)
        xty = xs.T @ yc
        proj = evecs.T @ xty
        for alpha in alphas:
            coef = evecs @ (proj / (evals + alpha))
            models.append(
                _assemble(alpha, balanced, mean, scale, coef, y_mean, f)
            )
    else:
        evals, evecs = np.linalg.eigh(xs @ xs.T)
        proj = evecs.T @ yc
        for alpha in alphas:
            dual = evecs @ (proj / (evals + alpha))
            coef = xs.T @ dual
            models.append(
                _assemble(alpha, balanced, mean, scale, coef, y_mean, f)
            )
    return models


def _assemble(alpha, balanced, mean, scale, coef, intercept, n_features):
    model = RidgeFailureClassifier(alpha=float(alpha), balanced=balanced)
    model.mean_ = mean
    model.scale_ = scale
    model.coef_ = coef
    model.intercept_ = float(intercept)
    model.n_features_in_ = n_features
    return model


def select_alpha(
    X,
    y,
    groups,
    alphas=ALPHA_GRID_DEFAULT,
    inner_k=5,
    seed=0,
    balanced=False,
):
    """Pick the alpha maximizing mean inner-fold balanced accuracy.

    Inner folds are grouped by machine (``groups``) and stratified with the
    same greedy assignment as the outer protocol.  Single-class inner folds
    are skipped with a warning; ties go to the larger alpha.
    """
    alphas = list(alphas)
    if not alphas:
        raise ValueError("alpha grid must be nonempty")
    if len(alphas) == 1:
        return float(alphas[0])
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    groups = np.asarray(groups)

    stats = {}
    for g, label in zip(groups, y):
        pos, tot = stats.get(g, (0, 0))
        stats[g] = (pos + int(label), tot + 1)
    k = min(inner_k, len(stats))
    rng = np.random.default_rng(seed)
    folds = assign_machines(stats, k, rng)

    scores = np.zeros(len(alphas))
    used = 0
    for test_machines in folds:
        test_mask = np.isin(groups, list(test_machines))
        y_tr, y_te = y[~test_mask], y[test_mask]
        if len(np.unique(y_tr)) < 2 or len(np.unique(y_te)) < 2:
            warnings.warn("skipping single-class inner fold")
            continue
        models = fit_ridge_path(X[~test_mask], y_tr, alphas, balanced=balanced)
        for i, model in enumerate(models):
            pred = model.predict(X[test_mask])
            scores[i] += compute_metrics(y_te, pred).balanced_accuracy
        used += 1
    if used == 0:
        raise ValueError("all inner folds were single-class")
    scores /= used

    best = 0
    for i in range(1, len(alphas)):
        if scores[i] >= scores[best]:
            best = i
    return float(alphas[best])
