import numpy as np
import pytest

from gbm import (
    BINARY,
    MULTICLASS,
    REGRESSION,
    GbmModel,
    GbmParams,
    Tree,
    accuracy,
    fit,
    model_from_dict,
    model_to_dict,
    predict_labels,
    predict_raw,
    predict_raw_batch,
    stump,
)
from utils.errors import FitError


def separated_uniform(rng, n, gaps):
    """Uniform draws on [0, 1] that avoid the given (lo, hi) gaps."""
    x = rng.random(n * 3)
    keep = np.ones_like(x, dtype=bool)
    for lo, hi in gaps:
        keep &= (x < lo) | (x > hi)
    return x[keep][:n]


def test_stump_prediction():
    model = GbmModel(REGRESSION, [[stump(0, 1.0, 2.0, 5.0)]], [0.0], 1.0, features=(0,))
    assert predict_raw(model, [0.0]) == 2.0
    assert predict_raw(model, [1.0]) == 5.0


def test_zero_trees_predict_base_score():
    model = GbmModel(REGRESSION, [[]], [0.7], 0.1, features=(0, 1))
    assert model.n_trees == 0
    assert predict_raw(model, [3.0, -1.0]) == 0.7


def test_duplicated_trees_with_halved_rate_match():
    t1, t2 = stump(0, 0.5, -1.0, 3.0), stump(1, 2.0, 4.0, 0.5)
    once = GbmModel(REGRESSION, [[t1, t2]], [1.0], 0.2, features=(0, 1))
    twice = GbmModel(REGRESSION, [[t1, t1, t2, t2]], [1.0], 0.1, features=(0, 1))
    X = np.random.default_rng(0).uniform(-1, 3, (50, 2))
    np.testing.assert_allclose(predict_raw_batch(once, X), predict_raw_batch(twice, X))


def test_internal_values_are_cover_weighted_means():
    tree = stump(0, 0.0, 1.0, 4.0, left_cover=3.0, right_cover=1.0)
    assert tree.expected_value == pytest.approx(1.75)


def test_tree_rejects_inconsistent_cover():
    with pytest.raises(FitError):
        Tree([1, -1, -1], [2, -1, -1], [0, -1, -1], [0.0, 0.0, 0.0], [0.0, 1.0, 2.0], [3.0, 1.0, 1.0])


def test_identity_target_is_learned():
    rng = np.random.default_rng(1)
    X = rng.random((500, 3))
    model = fit(X, X[:, 0], REGRESSION, seed=3)
    assert model.acc > 0.98
    assert len(model.train_loss) == model.n_trees + 1
    assert np.all(np.diff(model.train_loss) <= 1e-12)
    assert model.train_loss[-1] < model.train_loss[0]


def test_independent_noise_scores_near_zero():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((400, 3))
    y = rng.standard_normal(400)
    model = fit(X, y, REGRESSION, seed=3)
    assert model.acc <= 0.05


def test_separable_binary_target_is_perfect():
    rng = np.random.default_rng(4)
    x0 = separated_uniform(rng, 400, [(0.4, 0.6)])
    X = np.column_stack([x0, rng.random(x0.size)])
    y = (x0 > 0.5).astype(float)
    model = fit(X, y, BINARY, seed=5, n_classes=2)
    assert model.acc == 1.0
    np.testing.assert_array_equal(predict_labels(model, X), y)


def test_multiclass_bins():
    rng = np.random.default_rng(6)
    x0 = separated_uniform(rng, 600, [(0.3, 0.36), (0.63, 0.7)])
    X = np.column_stack([x0, rng.random(x0.size)])
    y = np.digitize(x0, [1 / 3, 2 / 3]).astype(float)
    model = fit(X, y, MULTICLASS, seed=7, n_classes=3)
    assert model.n_outputs == 3
    assert model.acc >= 0.95
    assert predict_raw(model, X[0]).shape == (3,)


def test_fit_is_deterministic():
    rng = np.random.default_rng(8)
    X = rng.random((200, 4))
    y = X[:, 1] + 0.1 * rng.standard_normal(200)
    params = GbmParams(n_trees=20)
    a = fit(X, y, REGRESSION, params, seed=9)
    b = fit(X, y, REGRESSION, params, seed=9)
    assert a.acc == b.acc
    np.testing.assert_array_equal(predict_raw_batch(a, X), predict_raw_batch(b, X))


@pytest.mark.parametrize(
    "X, y, task, n_classes",
    [
        (np.zeros((10, 2)), np.arange(10.0), REGRESSION, None),
        (np.random.default_rng(0).random((30, 2)), np.ones(30), REGRESSION, None),
        (np.random.default_rng(0).random((30, 2)), np.arange(30.0) % 2, MULTICLASS, 2),
    ],
    ids=["too-few-rows", "constant-target", "two-class-multiclass"],
)
def test_fit_rejects_degenerate_inputs(X, y, task, n_classes):
    with pytest.raises(FitError):
        fit(X, y, task, n_classes=n_classes)


def test_classification_accuracy_is_fraction_correct():
    model = GbmModel(BINARY, [[stump(0, 0.5, -1.0, 1.0)]], [0.0], 1.0, features=(0,))
    X = np.array([[0.0], [1.0], [0.0], [1.0]])
    assert accuracy(model, X, [0, 1, 1, 1]) == 0.75


def test_regression_accuracy_is_clipped_r2():
    model = GbmModel(REGRESSION, [[stump(0, 0.5, 0.0, 1.0)]], [0.0], 1.0, features=(0,))
    X = np.array([[0.0], [1.0], [0.0], [1.0]])
    assert accuracy(model, X, [0.0, 1.0, 0.0, 1.0]) == 1.0
    assert accuracy(model, X, [1.0, 0.0, 1.0, 0.0]) == 0.0


def test_zero_variance_holdout_scores_zero():
    model = GbmModel(REGRESSION, [[]], [1.0], 0.1, features=(0,))
    assert accuracy(model, np.zeros((3, 1)), [2.0, 2.0, 2.0]) == 0.0


def test_model_dict_preserves_predictions():
    rng = np.random.default_rng(10)
    X = rng.random((120, 2))
    model = fit(X, X[:, 0] * 2 - X[:, 1], REGRESSION, GbmParams(n_trees=10), seed=1)
    restored = model_from_dict(model_to_dict(model))
    np.testing.assert_allclose(predict_raw_batch(restored, X), predict_raw_batch(model, X))
    assert restored.acc == model.acc
