import json

import numpy as np
import pytest

from gbm import LEAF, MULTICLASS, REGRESSION, GbmModel, GbmParams, Tree, fit, predict_raw, stump
from interp_graph import build_global_graph
from tabular import generate_synthetic_table
from treeshap import (
    abs_attributions,
    coalition_value,
    dump_attributions,
    expected_values,
    local_accuracy_error,
    shap_brute_force,
    shap_values,
    tree_shap,
)
from utils.errors import FitError


@pytest.fixture(scope="module")
def fitted_model():
    rng = np.random.default_rng(0)
    X = rng.random((300, 4))
    y = X[:, 0] * X[:, 1] + np.sin(3 * X[:, 2]) + 0.05 * rng.standard_normal(300)
    return fit(X, y, REGRESSION, GbmParams(n_trees=15, max_depth=3), seed=2), X


def test_single_leaf_tree_has_zero_attributions():
    leaf = Tree([-1], [-1], [-1], [0.0], [2.5], [10.0])
    model = GbmModel(REGRESSION, [[leaf]], [1.0], 0.5, features=(0, 1, 2))
    row = tree_shap(model, [0.3, 0.1, 9.0])
    np.testing.assert_array_equal(row.attributions, np.zeros(3))
    assert row.base == pytest.approx(2.25)
    assert row.total == pytest.approx(predict_raw(model, [0.3, 0.1, 9.0]))


def test_stump_attribution_matches_closed_form():
    a, b, pi = 3.0, -1.0, 0.25
    tree = stump(0, 0.5, a, b, left_cover=pi * 40, right_cover=(1 - pi) * 40)
    model = GbmModel(REGRESSION, [[tree]], [0.0], 1.0, features=(0, 1))
    row = tree_shap(model, [0.0, 7.0])
    assert row.attributions[0] == pytest.approx((1 - pi) * (a - b))
    assert row.attributions[1] == 0.0
    assert row.base == pytest.approx(pi * a + (1 - pi) * b)


def random_tree(rng, n_features, max_depth):
    """Preorder node arrays of a random tree with integer leaf covers."""
    left, right, feature, threshold, value, cover = [], [], [], [], [], []

    def grow(depth):
        i = len(left)
        left.append(LEAF)
        right.append(LEAF)
        feature.append(LEAF)
        threshold.append(0.0)
        value.append(0.0)
        cover.append(0.0)
        if depth < max_depth and rng.random() < 0.8:
            feature[i] = int(rng.integers(n_features))
            threshold[i] = float(rng.random())
            left[i] = grow(depth + 1)
            right[i] = grow(depth + 1)
            cover[i] = cover[left[i]] + cover[right[i]]
        else:
            value[i] = float(rng.normal())
            cover[i] = float(rng.integers(1, 50))
        return i

    grow(0)
    return Tree(left, right, feature, threshold, value, cover)


def test_polynomial_algorithm_matches_enumeration_on_random_trees():
    rng = np.random.default_rng(20)
    worst = 0.0
    for _ in range(200):
        M = int(rng.integers(1, 5))
        tree = random_tree(rng, M, max_depth=int(rng.integers(1, 6)))
        model = GbmModel(REGRESSION, [[tree]], [0.0], 1.0, features=tuple(range(M)))
        row = rng.random(M)
        fast = tree_shap(model, row)
        exact = shap_brute_force(model, row)
        worst = max(worst, float(np.max(np.abs(fast.attributions - exact.attributions))))
        assert fast.base == pytest.approx(exact.base, abs=1e-9)
    assert worst <= 1e-9


def test_polynomial_algorithm_matches_enumeration(fitted_model):
    model, X = fitted_model
    for row in X[:5]:
        fast = tree_shap(model, row)
        exact = shap_brute_force(model, row)
        assert np.max(np.abs(fast.attributions - exact.attributions)) <= 1e-9
        assert fast.base == pytest.approx(exact.base, abs=1e-9)


@pytest.mark.parametrize(
    "leaves, expected",
    [((0.0, 0.0, 0.0, 1.0), 0.375), ((0.0, 1.0, 1.0, 0.0), -0.25)],
    ids=["and", "xor"],
)
def test_interchangeable_features_get_equal_attributions(leaves, expected):
    a, b, c, d = leaves
    tree = Tree(
        children_left=[1, 3, 5, LEAF, LEAF, LEAF, LEAF],
        children_right=[2, 4, 6, LEAF, LEAF, LEAF, LEAF],
        feature=[0, 1, 1, LEAF, LEAF, LEAF, LEAF],
        threshold=[0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0],
        value=[0.0, 0.0, 0.0, a, b, c, d],
        cover=[40.0, 20.0, 20.0, 10.0, 10.0, 10.0, 10.0],
    )
    model = GbmModel(REGRESSION, [[tree]], [0.0], 1.0, features=(0, 1, 2))
    row = tree_shap(model, [0.9, 0.9, 0.3])
    assert row.attributions[0] == pytest.approx(row.attributions[1], abs=1e-12)
    assert row.attributions[0] == pytest.approx(expected)
    assert row.attributions[2] == 0.0


def test_local_accuracy(fitted_model):
    model, X = fitted_model
    assert max(local_accuracy_error(model, row) for row in X[:20]) <= 1e-9


@pytest.mark.slow
def test_local_accuracy_on_every_column_model():
    table, _ = generate_synthetic_table(4, 6, 4000, seed=1)
    build = build_global_graph(table, master_seed=0, threads=4)
    assert len(build.fits) == 24
    for column_fit in build.fits:
        model = column_fit.model
        rows = table.values[:100][:, list(model.features)]
        assert max(local_accuracy_error(model, row) for row in rows) <= 1e-9


def test_empty_coalition_is_expected_value(fitted_model):
    model, X = fitted_model
    assert coalition_value(model, X[0], []) == pytest.approx(expected_values(model)[0])
    assert coalition_value(model, X[0], range(4)) == pytest.approx(predict_raw(model, X[0]))


def test_brute_force_refuses_wide_models():
    model = GbmModel(REGRESSION, [[]], [0.0], 0.1, features=tuple(range(13)))
    with pytest.raises(FitError):
        shap_brute_force(model, np.zeros(13))


def test_wrong_row_width_is_rejected(fitted_model):
    model, _ = fitted_model
    with pytest.raises(FitError):
        shap_values(model, np.zeros((1, 3)))


def test_multiclass_rows_per_class():
    rng = np.random.default_rng(3)
    X = rng.random((240, 3))
    y = np.digitize(X[:, 0], [1 / 3, 2 / 3]).astype(float)
    model = fit(X, y, MULTICLASS, GbmParams(n_trees=8, max_depth=2), seed=1, n_classes=3)
    rows = tree_shap(model, X[0])
    assert [r.output for r in rows] == [0, 1, 2]
    raw = predict_raw(model, X[0])
    for r in rows:
        assert r.total == pytest.approx(raw[r.output], abs=1e-9)
    phi, _ = shap_values(model, X[:4])
    np.testing.assert_allclose(abs_attributions(model, X[:4]), np.abs(phi).mean(axis=1))


def test_dump_attributions_writes_json_lines(tmp_path, fitted_model):
    model, X = fitted_model
    path = tmp_path / "shap.jsonl"
    dump_attributions([tree_shap(model, row) for row in X[:3]], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    doc = json.loads(lines[0])
    assert len(doc["attributions"]) == 4
    assert doc["output"] == 0
