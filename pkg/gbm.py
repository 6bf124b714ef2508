"""Gradient-boosted regression trees with exact greedy splits.

One model predicts one column of an encoded table from the others and
reports its held-out accuracy Acc(v): classification accuracy for
categorical targets, R^2 clamped to [0, 1] for numeric ones.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from utils.diagnostics import warn
from utils.errors import FitError

REGRESSION = "regression"
BINARY = "binary"
MULTICLASS = "multiclass"

MIN_ROWS = 20
LEAF = -1
_EPS = 1e-12
# Newton steps on saturated probabilities can explode; cap them.
MAX_CLASSIFICATION_STEP = 10.0


@dataclass(frozen=True)
class GbmParams:
    n_trees: int = 100
    max_depth: int = 4
    learning_rate: float = 0.1
    min_child_cover: int = 5
    holdout_fraction: float = 0.25

    def to_dict(self):
        return asdict(self)


class TreeNode(NamedTuple):
    feature: int
    threshold: float
    left: int
    right: int
    value: float
    cover: float

    @property
    def is_leaf(self):
        return self.left == LEAF


@dataclass(eq=False)
class Tree:
    """Flat array tree; node 0 is the root and children follow their parent.

    Rows with x[feature] < threshold go left. Internal node values hold the
    cover-weighted mean of the leaves below them.
    """

    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    cover: np.ndarray
    max_depth: int = field(init=False, default=0)

    def __post_init__(self):
        self.children_left = np.asarray(self.children_left, dtype=np.int32)
        self.children_right = np.asarray(self.children_right, dtype=np.int32)
        self.feature = np.asarray(self.feature, dtype=np.int32)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.value = np.array(self.value, dtype=np.float64)
        self.cover = np.asarray(self.cover, dtype=np.float64)
        n = len(self.children_left)
        for name in ("children_right", "feature", "threshold", "value", "cover"):
            if len(getattr(self, name)) != n:
                raise FitError(f"Tree array '{name}' has inconsistent length")
        if n == 0 or np.any(self.cover <= 0):
            raise FitError("Every tree node needs a positive cover")

        depth = np.zeros(n, dtype=np.int64)
        for i in range(n):
            left, right = self.children_left[i], self.children_right[i]
            if (left == LEAF) != (right == LEAF):
                raise FitError(f"Node {i} has exactly one child")
            if left == LEAF:
                continue
            if left <= i or right <= i:
                raise FitError(f"Children of node {i} must follow it")
            if not np.isclose(self.cover[left] + self.cover[right], self.cover[i]):
                raise FitError(f"Cover of node {i} is not the sum of its children")
            depth[left] = depth[right] = depth[i] + 1
        for i in range(n - 1, -1, -1):
            left, right = self.children_left[i], self.children_right[i]
            if left != LEAF:
                self.value[i] = (
                    self.cover[left] * self.value[left] + self.cover[right] * self.value[right]
                ) / self.cover[i]
        self.max_depth = int(depth.max())

    @property
    def n_nodes(self):
        return len(self.children_left)

    def node(self, i):
        return TreeNode(
            int(self.feature[i]),
            float(self.threshold[i]),
            int(self.children_left[i]),
            int(self.children_right[i]),
            float(self.value[i]),
            float(self.cover[i]),
        )

    @property
    def expected_value(self):
        return float(self.value[0])

    def predict(self, X):
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.max_depth):
            internal = self.children_left[node] != LEAF
            if not internal.any():
                break
            go_left = X[rows, np.maximum(self.feature[node], 0)] < self.threshold[node]
            nxt = np.where(go_left, self.children_left[node], self.children_right[node])
            node = np.where(internal, nxt, node)
        return self.value[node]

    def to_dict(self):
        nodes = []
        for i in range(self.n_nodes):
            n = self.node(i)
            if n.is_leaf:
                nodes.append({"value": n.value, "cover": n.cover})
            else:
                nodes.append(
                    {
                        "feature": n.feature,
                        "threshold": n.threshold,
                        "left": n.left,
                        "right": n.right,
                        "cover": n.cover,
                    }
                )
        return {"nodes": nodes}

    @classmethod
    def from_dict(cls, doc):
        nodes = doc["nodes"]
        return cls(
            children_left=[n.get("left", LEAF) for n in nodes],
            children_right=[n.get("right", LEAF) for n in nodes],
            feature=[n.get("feature", LEAF) for n in nodes],
            threshold=[n.get("threshold", 0.0) for n in nodes],
            value=[n.get("value", 0.0) for n in nodes],
            cover=[n["cover"] for n in nodes],
        )


def stump(feature, threshold, left_value, right_value, left_cover=1.0, right_cover=1.0):
    """Depth-1 tree, handy for fixtures."""
    return Tree(
        children_left=[1, LEAF, LEAF],
        children_right=[2, LEAF, LEAF],
        feature=[feature, LEAF, LEAF],
        threshold=[threshold, 0.0, 0.0],
        value=[0.0, left_value, right_value],
        cover=[left_cover + right_cover, left_cover, right_cover],
    )


@dataclass(eq=False)
class GbmModel:
    task: str
    trees: list
    base_score: np.ndarray
    learning_rate: float
    features: tuple = ()
    target: Optional[object] = None
    acc: float = 0.0
    seed: int = 0
    n_classes: Optional[int] = None
    params: Optional[GbmParams] = None
    train_loss: list = field(default_factory=list)

    def __post_init__(self):
        self.base_score = np.atleast_1d(np.asarray(self.base_score, dtype=np.float64))
        if len(self.trees) != len(self.base_score):
            raise FitError("One tree list per output is required")

    @property
    def n_outputs(self):
        return len(self.base_score)

    @property
    def n_features(self):
        return len(self.features)

    @property
    def n_trees(self):
        return len(self.trees[0]) if self.trees else 0


def infer_task(spec):
    if not spec.is_categorical:
        return REGRESSION
    return BINARY if spec.cardinality == 2 else MULTICLASS


def predict_raw_batch(model, X):
    """Raw scores, shape (n_rows, n_outputs)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.tile(model.base_score, (X.shape[0], 1))
    for k, trees in enumerate(model.trees):
        for tree in trees:
            out[:, k] += model.learning_rate * tree.predict(X)
    return out


def predict_raw(model, row):
    """base_score + learning_rate * sum of tree outputs for one feature row."""
    raw = predict_raw_batch(model, np.asarray(row, dtype=np.float64).reshape(1, -1))[0]
    return float(raw[0]) if model.n_outputs == 1 else raw


def predict_labels(model, X):
    raw = predict_raw_batch(model, X)
    if model.task == BINARY:
        return (raw[:, 0] > 0).astype(np.int64)
    return np.argmax(raw, axis=1)


def accuracy(model, X_holdout, y_holdout):
    """Fraction correct for classification, max(0, R^2) for regression."""
    y = np.asarray(y_holdout, dtype=np.float64)
    if y.size == 0:
        raise FitError("Holdout set is empty")
    if model.task == REGRESSION:
        variance = np.var(y)
        if variance == 0.0:
            warn("zero_variance_holdout", target=_target_name(model))
            return 0.0
        mse = np.mean((predict_raw_batch(model, X_holdout)[:, 0] - y) ** 2)
        return float(min(1.0, max(0.0, 1.0 - mse / variance)))
    return float(np.mean(predict_labels(model, X_holdout) == y.astype(np.int64)))


def _target_name(model):
    return model.target.name if model.target is not None else "target"


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softmax(F):
    shifted = F - F.max(axis=1, keepdims=True)
    expf = np.exp(shifted)
    return expf / expf.sum(axis=1, keepdims=True)


def _loss(task, F, y, onehot):
    if task == REGRESSION:
        return float(np.mean((F[:, 0] - y) ** 2))
    if task == BINARY:
        p = np.clip(_sigmoid(F[:, 0]), _EPS, 1 - _EPS)
        return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))
    P = np.clip(_softmax(F), _EPS, 1.0)
    return float(-np.mean(np.sum(onehot * np.log(P), axis=1)))


def _gradients(task, F, y, onehot):
    """Per-output (g, h) pairs of the loss w.r.t. the raw scores."""
    if task == REGRESSION:
        return [(F[:, 0] - y, np.ones_like(y))]
    if task == BINARY:
        p = _sigmoid(F[:, 0])
        return [(p - y, p * (1 - p))]
    P = _softmax(F)
    return [(P[:, k] - onehot[:, k], P[:, k] * (1 - P[:, k])) for k in range(F.shape[1])]


def _best_split(X, sorted_idx, members, m, g, h, min_child_cover):
    n_features = X.shape[1]
    order = sorted_idx[members[sorted_idx]].reshape(n_features, m)
    xs = X[order, np.arange(n_features)[:, None]]
    gs = np.cumsum(g[order], axis=1)
    hs = np.cumsum(h[order], axis=1)
    G, H = gs[0, -1], hs[0, -1]

    GL, HL = gs[:, :-1], hs[:, :-1]
    GR, HR = G - GL, H - HL
    n_left = np.arange(1, m)
    valid = (
        (xs[:, 1:] > xs[:, :-1])
        & (n_left >= min_child_cover)[None, :]
        & ((m - n_left) >= min_child_cover)[None, :]
    )
    if not valid.any():
        return None
    gain = GL**2 / (HL + _EPS) + GR**2 / (HR + _EPS) - G**2 / (H + _EPS)
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))
    f, pos = divmod(best, m - 1)
    if not gain[f, pos] > _EPS:
        return None
    lo, hi = xs[f, pos], xs[f, pos + 1]
    threshold = 0.5 * (lo + hi)
    if threshold <= lo:
        threshold = hi
    return f, float(threshold)


def _grow_tree(X, sorted_idx, g, h, params, value_scale, clip):
    left, right, feature, threshold, value, cover = [], [], [], [], [], []

    def build(members, depth):
        node = len(left)
        m = int(members.sum())
        for column in (left, right, feature, threshold, value, cover):
            column.append(None)
        cover[node] = float(m)

        split = None
        if depth < params.max_depth and m >= 2 * params.min_child_cover:
            split = _best_split(X, sorted_idx, members, m, g, h, params.min_child_cover)
        if split is None:
            step = -g[members].sum() / (h[members].sum() + _EPS) * value_scale
            if clip:
                step = float(np.clip(step, -MAX_CLASSIFICATION_STEP, MAX_CLASSIFICATION_STEP))
            left[node], right[node], feature[node] = LEAF, LEAF, LEAF
            threshold[node], value[node] = 0.0, float(step)
            return node

        f, thr = split
        goes_left = X[:, f] < thr
        feature[node], threshold[node], value[node] = f, thr, 0.0
        left[node] = build(members & goes_left, depth + 1)
        right[node] = build(members & ~goes_left, depth + 1)
        return node

    build(np.ones(X.shape[0], dtype=bool), 0)
    return Tree(left, right, feature, threshold, value, cover)


def _holdout_split(n, fraction, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_hold = min(n - 1, max(1, int(round(fraction * n))))
    return np.sort(perm[n_hold:]), np.sort(perm[:n_hold])


def fit(X, y, task, params=None, seed=0, n_classes=None, target=None, features=None):
    """Fit a boosted ensemble; Acc is measured on a seeded holdout fold."""
    params = params or GbmParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise FitError(f"Feature matrix {X.shape} does not match target length {y.shape}")
    if X.shape[0] < MIN_ROWS:
        raise FitError(f"At least {MIN_ROWS} rows are required, got {X.shape[0]}")
    if np.unique(y).size < 2:
        raise FitError("Target has a single distinct value")
    if task not in (REGRESSION, BINARY, MULTICLASS):
        raise FitError(f"Unknown task: {task}")

    train, hold = _holdout_split(X.shape[0], params.holdout_fraction, seed)
    X_train, y_train = X[train], y[train]

    if task == REGRESSION:
        K = 1
        base = np.array([y_train.mean()])
        onehot = None
    else:
        if n_classes is None:
            n_classes = int(y.max()) + 1
        K = 1 if task == BINARY else int(n_classes)
        if task == MULTICLASS and K < 3:
            raise FitError(f"Multiclass fit needs at least 3 classes, got {K}")
        labels = y_train.astype(np.int64)
        if np.any(labels < 0) or np.any(labels >= max(K, 2)):
            raise FitError("Class codes fall outside 0..K-1")
        if task == BINARY:
            p = np.clip(labels.mean(), 1e-6, 1 - 1e-6)
            base = np.array([np.log(p / (1 - p))])
            onehot = None
        else:
            priors = np.bincount(labels, minlength=K) / labels.size
            base = np.log(np.clip(priors, 1e-6, None))
            onehot = np.eye(K)[labels]

    value_scale = (K - 1) / K if task == MULTICLASS else 1.0
    clip = task != REGRESSION
    sorted_idx = np.argsort(X_train, axis=0, kind="stable").T.copy()

    F = np.tile(base, (X_train.shape[0], 1))
    trees = [[] for _ in range(K)]
    losses = [_loss(task, F, y_train, onehot)]
    for _ in range(params.n_trees):
        grads = _gradients(task, F, y_train, onehot)
        for k, (g, h) in enumerate(grads):
            tree = _grow_tree(X_train, sorted_idx, g, h, params, value_scale, clip)
            trees[k].append(tree)
            F[:, k] += params.learning_rate * tree.predict(X_train)
        losses.append(_loss(task, F, y_train, onehot))

    model = GbmModel(
        task=task,
        trees=trees,
        base_score=base,
        learning_rate=params.learning_rate,
        features=tuple(features) if features is not None else tuple(range(X.shape[1])),
        target=target,
        seed=seed,
        params=params,
        train_loss=losses,
        n_classes=None if task == REGRESSION else max(K, 2),
    )
    model.acc = accuracy(model, X[hold], y[hold])
    logging.info(
        f"Fitted {task} model for {_target_name(model)}: acc={model.acc:.4f} "
        f"({len(train)} train / {len(hold)} holdout rows)"
    )
    return model


def model_to_dict(model):
    return {
        "task": model.task,
        "n_classes": model.n_classes,
        "learning_rate": model.learning_rate,
        "base_score": [float(b) for b in model.base_score],
        "features": list(model.features),
        "target": model.target.to_dict() if model.target is not None else None,
        "acc": model.acc,
        "seed": model.seed,
        "trees": [[tree.to_dict() for tree in trees] for trees in model.trees],
    }


def model_from_dict(doc):
    return GbmModel(
        task=doc["task"],
        trees=[[Tree.from_dict(t) for t in trees] for trees in doc["trees"]],
        base_score=doc["base_score"],
        learning_rate=doc["learning_rate"],
        features=tuple(doc.get("features", ())),
        acc=doc.get("acc", 0.0),
        seed=doc.get("seed", 0),
        n_classes=doc.get("n_classes"),
    )
