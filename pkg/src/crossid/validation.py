"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np


def check_feature_matrix(X) -> np.ndarray:
    """Coerce X to a 2-D float64 array with finite entries."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    if X.shape[0] == 0:
        raise ValueError("empty feature matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    return X


def check_binary_labels(y, classes: tuple[int, int]) -> np.ndarray:
    """Validate labels against `classes`; both classes must be present.

    Raises ValueError("degenerate labels") when only one class occurs.
    """
    y = np.asarray(y)
    values = set(np.unique(y).tolist())
    allowed = set(classes)
    if not values <= allowed:
        raise ValueError(f"labels must be in {sorted(allowed)}, got {sorted(values)}")
    if len(values) < 2:
        raise ValueError(f"degenerate labels: only class {sorted(values)} present")
    return y.astype(np.float64)


def check_consistent_length(X: np.ndarray, y: np.ndarray) -> None:
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")


def check_random_state(seed) -> np.random.Generator:
    """Build a numpy Generator from an int seed or pass a Generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = 0
    return np.random.Generator(np.random.PCG64(int(seed)))
