import math

import numpy as np
import pytest

from crossid.learners import (
    LinearSVM,
    LogisticRegression,
    RandomForest,
    finite_check,
    fit_one_vs_rest_svms,
    load_model,
    save_model,
)


def _blobs(seed=0, n=60, d=4, margin=0.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    if margin:
        keep = np.abs(X[:, 0] + 0.5 * X[:, 1]) > margin
        X = X[keep]
    y = np.where(X[:, 0] + 0.5 * X[:, 1] > 0, 1, -1)
    return X, y


# ---------------------------------------------------------------------------
# linear SVM
# ---------------------------------------------------------------------------

def test_svm_separable_signs():
    model = LinearSVM().fit([[-1.0], [1.0]], [-1, 1])
    assert np.sign(model.decision_function([[2.0]]))[0] == 1
    assert np.sign(model.decision_function([[-2.0]]))[0] == -1


def test_svm_separable_training_accuracy_one():
    X, y = _blobs(seed=1, n=80, margin=0.4)
    model = LinearSVM(C=10.0).fit(X, y)
    assert (model.predict(X) == y).all()


def test_svm_conflicting_labels_keep_positive_hinge():
    # same point with both labels: no separator exists, so the optimum keeps
    # hinge loss > 0; a grid search over w confirms the objective lower bound
    X = np.array([[1.0], [1.0]])
    y = np.array([1, -1])
    model = LinearSVM(C=1.0).fit(X, y)

    def objective(w, b):
        margins = y * (X[:, 0] * w + b)
        return 0.5 * (w * w + b * b) + np.maximum(0.0, 1.0 - margins).sum()

    grid = np.linspace(-3, 3, 121)
    grid_min = min(objective(w, b) for w in grid for b in grid)
    hinge = np.maximum(0.0, 1.0 - y * model.decision_function(X)).sum()
    assert hinge > 0.5
    assert objective(model.weights_[0], model.bias_) <= grid_min + 1e-3


def test_svm_degenerate_labels_error():
    with pytest.raises(ValueError, match="degenerate labels"):
        LinearSVM().fit([[0.0], [1.0]], [1, 1])


def test_svm_relabeling_flips_decision_values():
    X, y = _blobs(seed=2)
    a = LinearSVM(random_state=5).fit(X, y)
    b = LinearSVM(random_state=5).fit(X, -y)
    assert np.max(np.abs(a.decision_function(X) + b.decision_function(X))) < 1e-6


def test_svm_determinism():
    X, y = _blobs(seed=3)
    a = LinearSVM(random_state=7).fit(X, y)
    b = LinearSVM(random_state=7).fit(X, y)
    assert np.array_equal(a.weights_, b.weights_)
    assert a.bias_ == b.bias_


def test_svm_gram_and_primal_paths_agree():
    X, y = _blobs(seed=4, n=30, d=50)  # n < d: gram path
    gram = LinearSVM(random_state=1).fit(X, y)
    Xwide, _ = X, y
    primal = LinearSVM(random_state=1)
    from crossid.learners import _dual_cd_primal
    from crossid.validation import check_random_state

    w, b = _dual_cd_primal(X, np.asarray(y, dtype=float), 1.0, 1000, 1e-6,
                           check_random_state(1))
    assert np.allclose(gram.weights_, w, atol=1e-6)
    assert math.isclose(gram.bias_, b, abs_tol=1e-6)


def test_one_vs_rest_each_model_prefers_its_row():
    rng = np.random.default_rng(5)
    X = np.eye(6) + 0.01 * rng.normal(size=(6, 6))
    W, b = fit_one_vs_rest_svms(X)
    scores = X @ W.T + b
    for i in range(6):
        assert np.argmax(scores[:, i]) == i


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------

def test_logistic_zero_model_predicts_half():
    model = LogisticRegression()
    model.weights_ = np.zeros(3)
    model.bias_ = 0.0
    p = model.predict_proba(np.random.default_rng(0).normal(size=(5, 3)))[:, 1]
    assert np.all(p == 0.5)


def test_logistic_monotone_on_separable_1d():
    X = np.linspace(-2, 2, 20).reshape(-1, 1)
    y = (X[:, 0] > 0).astype(int)
    model = LogisticRegression().fit(X, y)
    p = model.predict_proba(X)[:, 1]
    # non-decreasing everywhere (saturated tails may tie in float), strictly
    # increasing through the decision region
    assert np.all(np.diff(p) >= 0)
    assert p[0] < 0.5 < p[-1]
    mid = p[(p > 0.01) & (p < 0.99)]
    assert np.all(np.diff(mid) > 0)


def test_logistic_heavy_regularization_recovers_prior():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 3))
    y = (rng.random(50) < 0.3).astype(int)
    y[:2] = [0, 1]  # both classes
    model = LogisticRegression(l2=1e9).fit(X, y)
    assert np.max(np.abs(model.weights_)) < 1e-4
    p = model.predict_proba(X)[:, 1]
    assert np.allclose(p, y.mean(), atol=1e-3)


def test_logistic_calibration_on_training_set():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 4))
    y = (X[:, 0] + 0.3 * rng.normal(size=300) > 0.2).astype(int)
    model = LogisticRegression().fit(X, y)
    p = model.predict_proba(X)[:, 1]
    assert abs(p.mean() - y.mean()) < 0.05
    assert np.all((p > 0.0) & (p < 1.0))


def test_logistic_degenerate_labels_error():
    with pytest.raises(ValueError, match="degenerate labels"):
        LogisticRegression().fit([[0.0], [1.0]], [1, 1])


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------

def test_forest_single_stump_pure_split():
    model = RandomForest(trees=1, max_depth=1, max_features=1, bootstrap=False,
                         random_state=0).fit([[0.0], [0.0], [1.0], [1.0]], [0, 0, 1, 1])
    p = model.predict_proba([[0.0], [1.0]])[:, 1]
    assert p[0] == 0.0 and p[1] == 1.0


def test_forest_of_identical_trees_equals_one_tree():
    X, y = _blobs(seed=6)
    y01 = (y + 1) // 2
    one = RandomForest(trees=1, bootstrap=False, max_features=4, random_state=0).fit(X, y01)
    many = RandomForest(trees=7, bootstrap=False, max_features=4, random_state=0).fit(X, y01)
    assert np.allclose(one.predict_proba(X), many.predict_proba(X))


def test_forest_constant_features_predict_class_frequency():
    X = np.ones((10, 2))
    y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
    model = RandomForest(trees=3, bootstrap=False, random_state=0).fit(X, y)
    assert np.allclose(model.predict_proba(X)[:, 1], 0.3)


def test_forest_prediction_is_convex_combination_of_leaves():
    X, y = _blobs(seed=7)
    y01 = (y + 1) // 2
    model = RandomForest(trees=20, random_state=1).fit(X, y01)
    p = model.predict_proba(np.random.default_rng(8).normal(size=(50, 4)))[:, 1]
    assert np.all(p >= 0.0) and np.all(p <= 1.0)


def test_forest_determinism():
    X, y = _blobs(seed=9)
    y01 = (y + 1) // 2
    a = RandomForest(trees=10, random_state=3).fit(X, y01)
    b = RandomForest(trees=10, random_state=3).fit(X, y01)
    assert save_model(a) == save_model(b)


def test_forest_degenerate_labels_error():
    with pytest.raises(ValueError, match="degenerate labels"):
        RandomForest().fit([[0.0], [1.0]], [1, 1])


# ---------------------------------------------------------------------------
# serialization and finite checks
# ---------------------------------------------------------------------------

def test_serialization_round_trips_exactly():
    X, y = _blobs(seed=10)
    y01 = (y + 1) // 2
    models = [
        LinearSVM(random_state=2).fit(X, y),
        LogisticRegression().fit(X, y01),
        RandomForest(trees=5, random_state=2).fit(X, y01),
    ]
    for model in models:
        line = save_model(model)
        restored = load_model(line)
        assert save_model(restored) == line
        X2 = X[:5]
        if hasattr(model, "decision_function"):
            assert np.array_equal(model.decision_function(X2), restored.decision_function(X2))
        else:
            assert np.array_equal(model.predict_proba(X2), restored.predict_proba(X2))


def test_load_model_rejects_unknown_format():
    with pytest.raises(ValueError):
        load_model('{"format": "boosted/1"}')


def test_finite_check():
    X, y = _blobs(seed=11)
    model = LinearSVM().fit(X, y)
    assert finite_check(model)
    model.weights_ = model.weights_.copy()
    model.weights_[0] = np.inf
    assert not finite_check(model)

    forest = RandomForest(trees=2, random_state=0).fit(X, (y + 1) // 2)
    assert finite_check(forest)
    forest.trees_[0].prob = float("nan")
    # root may not be a leaf; inject into a leaf instead
    node = forest.trees_[0]
    while not node.is_leaf:
        node = node.left
    node.prob = float("nan")
    assert not finite_check(forest)

    empty = RandomForest()
    empty.trees_ = []
    assert finite_check(empty)
