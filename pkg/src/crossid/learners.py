"""Shared learning kernels: linear SVM, logistic regression, random forest.

Small, deterministic, dependency-light solvers:

* LinearSVM -- L1-hinge SVM trained by dual coordinate descent (the bias is
  learned through an augmented constant feature, so it is regularized).
* LogisticRegression -- L2-regularized negative log-likelihood minimized by
  gradient descent with Armijo backtracking; the intercept is unregularized,
  so at the optimum the mean predicted probability equals the positive rate.
* RandomForest -- Gini decision trees on bootstrap samples with random
  feature subsetting; prediction averages the per-tree leaf probabilities.

Every fit is a pure function of (data, hyperparameters, random_state).
Models serialize to a versioned dict schema that round-trips exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .validation import (
    check_binary_labels,
    check_consistent_length,
    check_feature_matrix,
    check_random_state,
)

MODEL_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# linear SVM
# ---------------------------------------------------------------------------

def _dual_cd_gram(K: np.ndarray, y: np.ndarray, C: float, max_iter: int, tol: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Dual coordinate descent on the hinge-loss dual over a Gram matrix.

    K must already include the bias augmentation (K = X X^T + 1).
    Returns the dual variables alpha in [0, C]^n.
    """
    n = K.shape[0]
    alpha = np.zeros(n)
    s = np.zeros(n)  # s = K @ (alpha * y)
    diag = np.diag(K)
    for _ in range(max_iter):
        order = rng.permutation(n)
        max_pg = 0.0
        for i in order:
            g = y[i] * s[i] - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                max_pg = max(max_pg, abs(pg))
                new = min(max(a - g / diag[i], 0.0), C)
                delta = new - a
                if delta != 0.0:
                    alpha[i] = new
                    s += (delta * y[i]) * K[:, i]
        if max_pg < tol:
            break
    return alpha


def _dual_cd_primal(X: np.ndarray, y: np.ndarray, C: float, max_iter: int, tol: float,
                    rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Dual coordinate descent maintaining the primal vector directly.

    Used when the Gram matrix would be too large. Returns (w, b) for the
    bias-augmented problem.
    """
    n, d = X.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    b = 0.0
    sqnorm = np.einsum("ij,ij->i", X, X) + 1.0
    for _ in range(max_iter):
        order = rng.permutation(n)
        max_pg = 0.0
        for i in order:
            g = y[i] * (X[i] @ w + b) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                max_pg = max(max_pg, abs(pg))
                new = min(max(a - g / sqnorm[i], 0.0), C)
                delta = new - a
                if delta != 0.0:
                    alpha[i] = new
                    w += (delta * y[i]) * X[i]
                    b += delta * y[i]
        if max_pg < tol:
            break
    return w, b

# Above this many samples the n x n Gram matrix is not worth its memory.
_GRAM_PATH_MAX_SAMPLES = 1500


def fit_linear_svm(X: np.ndarray, y: np.ndarray, C: float, max_iter: int, tol: float,
                   rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Solve min_w,b 0.5*||(w,b)||^2 + C * sum hinge(y * (w.x + b))."""
    n, d = X.shape
    if n <= _GRAM_PATH_MAX_SAMPLES and n < d:
        K = X @ X.T + 1.0
        alpha = _dual_cd_gram(K, y, C, max_iter, tol, rng)
        coef = alpha * y
        return X.T @ coef, float(coef.sum())
    return _dual_cd_primal(X, y, C, max_iter, tol, rng)


def fit_one_vs_rest_svms(X: np.ndarray, C: float = 1.0, max_iter: int = 1000,
                         tol: float = 1e-6, random_state: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Train one SVM per row of X: row i is the positive class, all other
    rows are negatives. The Gram matrix is shared across models.

    Returns (W, b) with one weight row and bias per input row.
    """
    X = check_feature_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise ValueError("degenerate labels: need at least 2 rows for one-vs-rest")
    rng = check_random_state(random_state)
    K = X @ X.T + 1.0
    coefs = np.zeros((n, n))
    biases = np.zeros(n)
    for i in range(n):
        y = np.full(n, -1.0)
        y[i] = 1.0
        alpha = _dual_cd_gram(K, y, C, max_iter, tol, rng)
        coefs[i] = alpha * y
        biases[i] = coefs[i].sum()
    return coefs @ X, biases


class LinearSVM(BaseEstimator, ClassifierMixin):
    """Linear hinge-loss SVM; labels in {-1, +1}."""

    def __init__(self, C: float = 1.0, max_iter: int = 1000, tol: float = 1e-6,
                 random_state: int = 0):
        self.C = C
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_binary_labels(y, (-1, 1))
        check_consistent_length(X, y)
        rng = check_random_state(self.random_state)
        self.weights_, self.bias_ = fit_linear_svm(X, y, self.C, self.max_iter, self.tol, rng)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = check_feature_matrix(X)
        return X @ self.weights_ + self.bias_

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0.0, 1, -1)

    def to_dict(self) -> dict:
        return {
            "format": f"linear_svm/{MODEL_FORMAT_VERSION}",
            "params": {"C": self.C, "max_iter": self.max_iter, "tol": self.tol,
                       "random_state": self.random_state},
            "weights": self.weights_.tolist(),
            "bias": self.bias_,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LinearSVM":
        _check_format(obj, "linear_svm")
        model = cls(**obj["params"])
        model.weights_ = np.asarray(obj["weights"], dtype=np.float64)
        model.bias_ = float(obj["bias"])
        return model


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------

class LogisticRegression(BaseEstimator, ClassifierMixin):
    """L2-regularized logistic regression; labels in {0, 1}.

    Minimizes (l2/2)*||w||^2 + sum log(1 + exp(-t_i * (w.x_i + b))) with
    t = 2y - 1 and an unregularized intercept, by damped Newton steps with
    Armijo backtracking (plain gradient descent stalls when l2 dwarfs the
    data curvature, which the regularization-limit contract exercises).
    """

    def __init__(self, l2: float = 1e-3, max_iter: int = 100, tol: float = 1e-6):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    def _objective(self, X, t, w, b):
        margins = t * (X @ w + b)
        return 0.5 * self.l2 * float(w @ w) + float(np.logaddexp(0.0, -margins).sum())

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_binary_labels(y, (0, 1))
        check_consistent_length(X, y)
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        n, d = X.shape
        t = 2.0 * y - 1.0
        Xa = np.hstack([X, np.ones((n, 1))])  # bias as an extra column
        theta = np.zeros(d + 1)
        reg = np.full(d + 1, self.l2)
        reg[d] = 0.0  # intercept unregularized
        obj = self._objective(X, t, theta[:d], theta[d])
        for _ in range(self.max_iter):
            z = Xa @ theta
            p = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                         np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
            grad = Xa.T @ (p - y) + reg * theta
            if float(np.max(np.abs(grad))) < self.tol:
                break
            s = np.clip(p * (1.0 - p), 1e-12, None)
            hess = (Xa * s[:, None]).T @ Xa + np.diag(reg + 1e-12)
            try:
                direction = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                direction = grad
            step = 1.0
            accepted = False
            slope = float(grad @ direction)
            while step > 1e-12:
                candidate = theta - step * direction
                cobj = self._objective(X, t, candidate[:d], candidate[d])
                if cobj <= obj - 1e-4 * step * slope:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            theta, obj = candidate, cobj
        self.weights_ = theta[:d].copy()
        self.bias_ = float(theta[d])
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = check_feature_matrix(X)
        z = X @ self.weights_ + self.bias_
        p = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)

    def to_dict(self) -> dict:
        return {
            "format": f"logistic/{MODEL_FORMAT_VERSION}",
            "params": {"l2": self.l2, "max_iter": self.max_iter, "tol": self.tol},
            "weights": self.weights_.tolist(),
            "bias": self.bias_,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LogisticRegression":
        _check_format(obj, "logistic")
        model = cls(**obj["params"])
        model.weights_ = np.asarray(obj["weights"], dtype=np.float64)
        model.bias_ = float(obj["bias"])
        return model


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------

@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    prob: float = 0.0  # leaf probability of class 1

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"p": self.prob}
        return {"f": self.feature, "t": self.threshold,
                "l": self.left.to_dict(), "r": self.right.to_dict()}

    @classmethod
    def from_dict(cls, obj: dict) -> "_TreeNode":
        if "p" in obj:
            return cls(prob=float(obj["p"]))
        return cls(feature=int(obj["f"]), threshold=float(obj["t"]),
                   left=cls.from_dict(obj["l"]), right=cls.from_dict(obj["r"]))


def _best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray):
    """Best (feature, threshold) by Gini impurity decrease; None if no split.

    Ties break toward the smaller feature index then smaller threshold, so
    the result does not depend on the order `features` was sampled in.
    """
    n = y.shape[0]
    total_pos = y.sum()
    parent_gini = 2.0 * (total_pos / n) * (1.0 - total_pos / n)
    best = None
    for f in np.sort(features):
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        sorted_y = y[order]
        distinct = np.nonzero(sorted_col[1:] > sorted_col[:-1])[0]
        if distinct.size == 0:
            continue
        pos_left = np.cumsum(sorted_y)[distinct]
        n_left = distinct + 1.0
        n_right = n - n_left
        pos_right = total_pos - pos_left
        gini_left = 2.0 * (pos_left / n_left) * (1.0 - pos_left / n_left)
        gini_right = 2.0 * (pos_right / n_right) * (1.0 - pos_right / n_right)
        decrease = parent_gini - (n_left * gini_left + n_right * gini_right) / n
        k = int(np.argmax(decrease))
        gain = float(decrease[k])
        if gain > 1e-12 and (best is None or gain > best[0] + 1e-12):
            lo = float(sorted_col[distinct[k]])
            hi = float(sorted_col[distinct[k] + 1])
            threshold = (lo + hi) / 2.0
            if threshold >= hi:  # midpoint of adjacent floats can round up
                threshold = lo
            best = (gain, int(f), threshold)
    return best


def _grow_tree(X: np.ndarray, y: np.ndarray, depth: int, max_depth: int,
               max_features: int, rng: np.random.Generator) -> _TreeNode:
    n, d = X.shape
    prob = float(y.mean())
    if depth >= max_depth or n < 2 or prob in (0.0, 1.0):
        return _TreeNode(prob=prob)
    features = rng.choice(d, size=max_features, replace=False)
    split = _best_split(X, y, features)
    if split is None:
        return _TreeNode(prob=prob)
    _, feature, threshold = split
    mask = X[:, feature] <= threshold
    if mask.all() or not mask.any():
        return _TreeNode(prob=prob)
    left = _grow_tree(X[mask], y[mask], depth + 1, max_depth, max_features, rng)
    right = _grow_tree(X[~mask], y[~mask], depth + 1, max_depth, max_features, rng)
    return _TreeNode(feature=feature, threshold=threshold, left=left, right=right)


class RandomForest(BaseEstimator, ClassifierMixin):
    """Bootstrap-aggregated Gini decision trees; labels in {0, 1}.

    predict_proba averages the leaf class-1 probabilities over trees.
    max_features=None means floor(sqrt(n_features)), minimum 1.
    """

    def __init__(self, trees: int = 100, max_depth: int = 8, max_features: int | None = None,
                 bootstrap: bool = True, random_state: int = 0):
        self.trees = trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_binary_labels(y, (0, 1))
        check_consistent_length(X, y)
        if self.trees < 1:
            raise ValueError("trees must be >= 1")
        n, d = X.shape
        if n < 2:
            raise ValueError("need at least 2 examples")
        k = self.max_features if self.max_features is not None else max(1, int(math.sqrt(d)))
        k = min(k, d)
        rng = check_random_state(self.random_state)
        self.trees_ = []
        for _ in range(self.trees):
            if self.bootstrap:
                idx = rng.integers(0, n, size=n)
                Xb, yb = X[idx], y[idx]
            else:
                Xb, yb = X, y
            self.trees_.append(_grow_tree(Xb, yb, 0, self.max_depth, k, rng))
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = check_feature_matrix(X)
        p = np.zeros(X.shape[0])
        for i, row in enumerate(X):
            total = 0.0
            for tree in self.trees_:
                node = tree
                while not node.is_leaf:
                    node = node.left if row[node.feature] <= node.threshold else node.right
                total += node.prob
            p[i] = total / len(self.trees_)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)

    def to_dict(self) -> dict:
        return {
            "format": f"random_forest/{MODEL_FORMAT_VERSION}",
            "params": {"trees": self.trees, "max_depth": self.max_depth,
                       "max_features": self.max_features, "bootstrap": self.bootstrap,
                       "random_state": self.random_state},
            "tree_nodes": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RandomForest":
        _check_format(obj, "random_forest")
        model = cls(**obj["params"])
        model.trees_ = [_TreeNode.from_dict(t) for t in obj["tree_nodes"]]
        return model


# ---------------------------------------------------------------------------
# shared model plumbing
# ---------------------------------------------------------------------------

_MODEL_CLASSES = {"linear_svm": LinearSVM, "logistic": LogisticRegression,
                  "random_forest": RandomForest}


def _check_format(obj: dict, expected: str) -> None:
    fmt = obj.get("format", "")
    name, _, version = fmt.partition("/")
    if name != expected:
        raise ValueError(f"expected a {expected} record, got {fmt!r}")
    if int(version) > MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported {expected} format version {version}")


def save_model(model) -> str:
    """Serialize a fitted model to a single JSON line (round-trip exact)."""
    return json.dumps(model.to_dict(), separators=(",", ":"), sort_keys=True)


def load_model(line: str):
    obj = json.loads(line)
    name = obj.get("format", "").partition("/")[0]
    if name not in _MODEL_CLASSES:
        raise ValueError(f"unknown model format {obj.get('format')!r}")
    return _MODEL_CLASSES[name].from_dict(obj)


def _tree_values(node: _TreeNode):
    if node.is_leaf:
        yield node.prob
    else:
        yield node.threshold
        yield from _tree_values(node.left)
        yield from _tree_values(node.right)


def finite_check(model) -> bool:
    """True iff every parameter of the model is finite (empty models pass)."""
    if hasattr(model, "trees_"):
        return all(math.isfinite(v) for tree in model.trees_ for v in _tree_values(tree))
    values = []
    if hasattr(model, "weights_"):
        values.extend(np.atleast_1d(model.weights_).ravel().tolist())
    if hasattr(model, "bias_"):
        values.append(model.bias_)
    return all(math.isfinite(v) for v in values)
