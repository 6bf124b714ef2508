"""Path-dependent TreeSHAP for the boosted ensembles in gbm.

Node covers act as the background distribution. The recursion extends and
unwinds the unique feature path of each leaf, tracking for every subset
size the proportion of permutations that reach it.
"""

import json
import logging
from dataclasses import dataclass
from itertools import combinations
from math import factorial
from typing import Optional

import numba
import numpy as np

from gbm import LEAF, predict_raw
from utils.errors import FitError

MAX_BRUTE_FORCE_FEATURES = 12


@dataclass(frozen=True, eq=False)
class ShapRow:
    target: Optional[int]
    attributions: np.ndarray
    base: float
    output: int = 0

    @property
    def total(self):
        return self.base + float(np.sum(self.attributions))

    def to_dict(self):
        return {
            "target": self.target,
            "output": self.output,
            "base": self.base,
            "attributions": [float(v) for v in self.attributions],
        }


@numba.jit(
    numba.types.void(
        numba.types.int32[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.int64,
        numba.types.float64,
        numba.types.float64,
        numba.types.int64,
    ),
    nopython=True,
    nogil=True,
)
def _extend_path(feature_indexes, zero_fractions, one_fractions, pweights, unique_depth,
                 zero_fraction, one_fraction, feature_index):
    feature_indexes[unique_depth] = feature_index
    zero_fractions[unique_depth] = zero_fraction
    one_fractions[unique_depth] = one_fraction
    if unique_depth == 0:
        pweights[unique_depth] = 1.0
    else:
        pweights[unique_depth] = 0.0

    for i in range(unique_depth - 1, -1, -1):
        pweights[i + 1] += one_fraction * pweights[i] * (i + 1) / (unique_depth + 1)
        pweights[i] = zero_fraction * pweights[i] * (unique_depth - i) / (unique_depth + 1)


@numba.jit(
    numba.types.void(
        numba.types.int32[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.int64,
        numba.types.int64,
    ),
    nopython=True,
    nogil=True,
)
def _unwind_path(feature_indexes, zero_fractions, one_fractions, pweights, unique_depth, path_index):
    one_fraction = one_fractions[path_index]
    zero_fraction = zero_fractions[path_index]
    next_one_portion = pweights[unique_depth]

    for i in range(unique_depth - 1, -1, -1):
        if one_fraction != 0:
            tmp = pweights[i]
            pweights[i] = next_one_portion * (unique_depth + 1) / ((i + 1) * one_fraction)
            next_one_portion = tmp - pweights[i] * zero_fraction * (unique_depth - i) / (unique_depth + 1)
        else:
            pweights[i] = (pweights[i] * (unique_depth + 1)) / (zero_fraction * (unique_depth - i))

    for i in range(path_index, unique_depth):
        feature_indexes[i] = feature_indexes[i + 1]
        zero_fractions[i] = zero_fractions[i + 1]
        one_fractions[i] = one_fractions[i + 1]


@numba.jit(
    numba.types.float64(
        numba.types.int32[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.int64,
        numba.types.int64,
    ),
    nopython=True,
    nogil=True,
)
def _unwound_path_sum(feature_indexes, zero_fractions, one_fractions, pweights, unique_depth, path_index):
    one_fraction = one_fractions[path_index]
    zero_fraction = zero_fractions[path_index]
    next_one_portion = pweights[unique_depth]
    total = 0.0

    for i in range(unique_depth - 1, -1, -1):
        if one_fraction != 0:
            tmp = next_one_portion * (unique_depth + 1) / ((i + 1) * one_fraction)
            total += tmp
            next_one_portion = pweights[i] - tmp * zero_fraction * ((unique_depth - i) / (unique_depth + 1))
        else:
            total += (pweights[i] / zero_fraction) / ((unique_depth - i) / (unique_depth + 1))

    return total


@numba.jit(
    numba.types.void(
        numba.types.int32[:],
        numba.types.int32[:],
        numba.types.int32[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.int64,
        numba.types.int64,
        numba.types.int32[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.float64[:],
        numba.types.float64,
        numba.types.float64,
        numba.types.int64,
    ),
    nopython=True,
    nogil=True,
)
def _tree_shap_recursive(children_left, children_right, features, thresholds, values, cover,
                         x, phi, node_index, unique_depth,
                         parent_feature_indexes, parent_zero_fractions, parent_one_fractions,
                         parent_pweights, parent_zero_fraction, parent_one_fraction,
                         parent_feature_index):
    # each depth works on its own slice of the shared buffers
    feature_indexes = parent_feature_indexes[unique_depth + 1:]
    feature_indexes[: unique_depth + 1] = parent_feature_indexes[: unique_depth + 1]
    zero_fractions = parent_zero_fractions[unique_depth + 1:]
    zero_fractions[: unique_depth + 1] = parent_zero_fractions[: unique_depth + 1]
    one_fractions = parent_one_fractions[unique_depth + 1:]
    one_fractions[: unique_depth + 1] = parent_one_fractions[: unique_depth + 1]
    pweights = parent_pweights[unique_depth + 1:]
    pweights[: unique_depth + 1] = parent_pweights[: unique_depth + 1]

    _extend_path(feature_indexes, zero_fractions, one_fractions, pweights, unique_depth,
                 parent_zero_fraction, parent_one_fraction, parent_feature_index)

    split_index = features[node_index]

    if children_right[node_index] == -1:
        for i in range(1, unique_depth + 1):
            w = _unwound_path_sum(feature_indexes, zero_fractions, one_fractions, pweights,
                                  unique_depth, i)
            phi[feature_indexes[i]] += w * (one_fractions[i] - zero_fractions[i]) * values[node_index]
        return

    cleft = children_left[node_index]
    cright = children_right[node_index]
    if x[split_index] < thresholds[node_index]:
        hot_index = cleft
        cold_index = cright
    else:
        hot_index = cright
        cold_index = cleft
    w = cover[node_index]
    hot_zero_fraction = cover[hot_index] / w
    cold_zero_fraction = cover[cold_index] / w
    incoming_zero_fraction = 1.0
    incoming_one_fraction = 1.0

    # a feature seen higher on the path is unwound and re-extended here
    path_index = 0
    while path_index <= unique_depth:
        if feature_indexes[path_index] == split_index:
            break
        path_index += 1

    if path_index != unique_depth + 1:
        incoming_zero_fraction = zero_fractions[path_index]
        incoming_one_fraction = one_fractions[path_index]
        _unwind_path(feature_indexes, zero_fractions, one_fractions, pweights, unique_depth, path_index)
        unique_depth -= 1

    _tree_shap_recursive(children_left, children_right, features, thresholds, values, cover,
                         x, phi, hot_index, unique_depth + 1,
                         feature_indexes, zero_fractions, one_fractions, pweights,
                         hot_zero_fraction * incoming_zero_fraction, incoming_one_fraction,
                         split_index)
    _tree_shap_recursive(children_left, children_right, features, thresholds, values, cover,
                         x, phi, cold_index, unique_depth + 1,
                         feature_indexes, zero_fractions, one_fractions, pweights,
                         cold_zero_fraction * incoming_zero_fraction, 0.0,
                         split_index)


@numba.njit(nogil=True)
def _ensemble_shap(roots, children_left, children_right, features, thresholds, values, cover,
                   X, phi, feature_indexes, zero_fractions, one_fractions, pweights):
    for r in range(X.shape[0]):
        for t in range(roots.shape[0]):
            _tree_shap_recursive(children_left, children_right, features, thresholds, values, cover,
                                 X[r], phi[r], roots[t], 0,
                                 feature_indexes, zero_fractions, one_fractions, pweights,
                                 1.0, 1.0, -1)


class _FlatEnsemble:
    """All trees of one output concatenated, children re-indexed globally."""

    def __init__(self, trees, learning_rate):
        offsets = np.cumsum([0] + [tree.n_nodes for tree in trees])
        self.roots = offsets[:-1].astype(np.int64)

        def shifted(children, offset):
            return np.where(children == LEAF, LEAF, children + offset)

        if trees:
            self.children_left = np.concatenate(
                [shifted(t.children_left, o) for t, o in zip(trees, offsets)]
            ).astype(np.int32)
            self.children_right = np.concatenate(
                [shifted(t.children_right, o) for t, o in zip(trees, offsets)]
            ).astype(np.int32)
            self.features = np.concatenate([t.feature for t in trees]).astype(np.int32)
            self.thresholds = np.concatenate([t.threshold for t in trees])
            self.values = learning_rate * np.concatenate([t.value for t in trees])
            self.cover = np.concatenate([t.cover for t in trees])
            max_depth = max(t.max_depth for t in trees)
        else:
            self.children_left = self.children_right = self.features = np.zeros(0, dtype=np.int32)
            self.thresholds = self.values = self.cover = np.zeros(0)
            max_depth = 0
        depth = max_depth + 2
        self.buffer_size = (depth * (depth + 1)) // 2

    def shap(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        phi = np.zeros(X.shape, dtype=np.float64)
        if self.roots.size == 0:
            return phi
        _ensemble_shap(
            self.roots,
            self.children_left,
            self.children_right,
            self.features,
            self.thresholds,
            self.values,
            self.cover,
            X,
            phi,
            np.zeros(self.buffer_size, dtype=np.int32),
            np.zeros(self.buffer_size, dtype=np.float64),
            np.zeros(self.buffer_size, dtype=np.float64),
            np.zeros(self.buffer_size, dtype=np.float64),
        )
        return phi


def _check_rows(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise FitError(f"Rows have {X.shape[1]} features, model expects {model.n_features}")
    return X


def expected_values(model):
    """Per-output base: base_score plus the cover-weighted mean of every tree."""
    return np.array(
        [
            model.base_score[k] + model.learning_rate * sum(t.expected_value for t in trees)
            for k, trees in enumerate(model.trees)
        ]
    )


def shap_values(model, X):
    """Attributions of shape (n_rows, n_outputs, n_features) and the per-output base."""
    X = _check_rows(model, X)
    phi = np.zeros((X.shape[0], model.n_outputs, X.shape[1]))
    for k, trees in enumerate(model.trees):
        phi[:, k, :] = _FlatEnsemble(trees, model.learning_rate).shap(X)
    return phi, expected_values(model)


def abs_attributions(model, X):
    """Mean over outputs of |phi|, shape (n_rows, n_features)."""
    phi, _ = shap_values(model, X)
    return np.abs(phi).mean(axis=1)


def _target_index(model):
    return model.target.index if model.target is not None else None


def tree_shap(model, row):
    """ShapRow for one feature row; a list with one ShapRow per class for multiclass."""
    phi, base = shap_values(model, np.asarray(row, dtype=np.float64).reshape(1, -1))
    rows = [
        ShapRow(_target_index(model), phi[0, k].copy(), float(base[k]), k)
        for k in range(model.n_outputs)
    ]
    return rows[0] if model.n_outputs == 1 else rows


def _path_value(tree, x, subset, node=0):
    if tree.children_left[node] == LEAF:
        return tree.value[node]
    left, right = tree.children_left[node], tree.children_right[node]
    f = tree.feature[node]
    if f in subset:
        child = left if x[f] < tree.threshold[node] else right
        return _path_value(tree, x, subset, child)
    return (
        tree.cover[left] * _path_value(tree, x, subset, left)
        + tree.cover[right] * _path_value(tree, x, subset, right)
    ) / tree.cover[node]


def coalition_value(model, row, subset, output=0):
    """Raw prediction when only the features in subset are known."""
    x = np.asarray(row, dtype=np.float64)
    subset = frozenset(subset)
    total = sum(_path_value(tree, x, subset) for tree in model.trees[output])
    return float(model.base_score[output] + model.learning_rate * total)


def shap_brute_force(model, row, output=0):
    """Exact Shapley values by enumerating every coalition; exponential in features."""
    M = model.n_features
    if M > MAX_BRUTE_FORCE_FEATURES:
        raise FitError(
            f"Brute-force Shapley refuses {M} features (limit {MAX_BRUTE_FORCE_FEATURES})"
        )
    x = np.asarray(row, dtype=np.float64)
    values = {}
    for size in range(M + 1):
        for subset in combinations(range(M), size):
            values[frozenset(subset)] = coalition_value(model, x, subset, output)

    phi = np.zeros(M)
    for u in range(M):
        others = [f for f in range(M) if f != u]
        for size in range(M):
            weight = factorial(size) * factorial(M - size - 1) / factorial(M)
            for subset in combinations(others, size):
                s = frozenset(subset)
                phi[u] += weight * (values[s | {u}] - values[s])
    return ShapRow(_target_index(model), phi, values[frozenset()], output)


def local_accuracy_error(model, row):
    """Largest relative gap between base + sum(phi) and the raw prediction."""
    rows = tree_shap(model, row)
    rows = rows if isinstance(rows, list) else [rows]
    raw = np.atleast_1d(predict_raw(model, row))
    return max(abs(r.total - raw[r.output]) / max(1.0, abs(raw[r.output])) for r in rows)


def dump_attributions(shap_rows, path):
    """Write ShapRows as JSON lines."""
    try:
        with open(path, "w", encoding="utf-8") as handle:
            for row in shap_rows:
                handle.write(json.dumps(row.to_dict(), sort_keys=True) + "\n")
    except OSError as e:
        logging.error(f"Error writing attributions to {path}: {e}")
        raise
