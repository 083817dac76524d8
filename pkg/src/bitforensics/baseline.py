"""Decision-tree and random-forest baselines over main-damage features.

Each bit becomes a one-hot feature vector (main damage per radial region,
"none" included) and an 8-way binary label vector, one bit per failure
cause.  Multi-label classification uses binary relevance: one independent
tree (or forest) per cause.

Trees split greedily on the Gini decrease.  Split selection compares
impurities with exact rational arithmetic so ties are real ties, broken
toward the lowest feature index.  Randomness (bootstrap resampling and
per-split feature subsets) comes from a small documented linear
congruential generator rather than a platform RNG, so a seed reproduces
the identical model anywhere:

    state' = (6364136223846793005 * state + 1442695040888963407) mod 2**64

A draw is the top 31 bits of the new state (``state' >> 33``); an index in
``[0, n)`` is a draw modulo ``n``; subsets of size k are the first k steps
of a Fisher-Yates shuffle.  The tree for target t, member i of a forest of
m trees seeds its own generator with
``seed + (t*m + i + 1) * 0x9E3779B97F4A7C15  (mod 2**64)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, clone

from .aggregation import MainDamageSummary, PROFILE_LOCATIONS
from .errors import DimensionMismatchError, EmptySetError, ShapeMismatchError
from .taxonomy import CAUSE_CSV_ORDER, DamageClass, FailureCause

#: Diagnosable causes, in label-vector order (green is the empty vector).
TARGET_CAUSES: tuple[FailureCause, ...] = tuple(
    c for c in CAUSE_CSV_ORDER if c is not FailureCause.GREEN
)

_DAMAGE_ORDER: tuple[DamageClass, ...] = tuple(DamageClass)

#: One-hot feature names: per region, the 11 damage codes plus "none".
FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{loc.name.lower()}={code}"
    for loc in PROFILE_LOCATIONS
    for code in [d.code for d in _DAMAGE_ORDER] + ["none"]
)

N_FEATURES = len(FEATURE_NAMES)


def build_features(summary: MainDamageSummary) -> list[int]:
    """Encode a main-damage summary as a binary one-hot feature vector."""
    row: list[int] = []
    for location in PROFILE_LOCATIONS:
        damage = summary.at(location)
        row.extend(1 if damage is d else 0 for d in _DAMAGE_ORDER)
        row.append(1 if damage is None else 0)
    return row


def causes_to_targets(causes: Iterable[FailureCause]) -> list[int]:
    """Binary label vector over :data:`TARGET_CAUSES`; green maps to zeros."""
    cause_set = set(causes)
    return [1 if c in cause_set else 0 for c in TARGET_CAUSES]


def targets_to_causes(row: Sequence[int]) -> frozenset[FailureCause]:
    """Invert a label vector; an all-zero row reads as green (no cause)."""
    causes = {c for c, v in zip(TARGET_CAUSES, row) if v}
    return frozenset(causes) if causes else frozenset({FailureCause.GREEN})


# ---------------------------------------------------------------------------
# reproducible randomness


_LCG_MULTIPLIER = 6364136223846793005
_LCG_INCREMENT = 1442695040888963407
_MASK64 = (1 << 64) - 1
_SEED_STRIDE = 0x9E3779B97F4A7C15


class Lcg64:
    """The 64-bit mixed congruential generator documented in the module doc."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_bits(self) -> int:
        self._state = (_LCG_MULTIPLIER * self._state + _LCG_INCREMENT) & _MASK64
        return self._state >> 33

    def randbelow(self, n: int) -> int:
        return self.next_bits() % n

    def sample(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n): a partial Fisher-Yates shuffle."""
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    @staticmethod
    def substream(seed: int, index: int) -> "Lcg64":
        return Lcg64((seed + (index + 1) * _SEED_STRIDE) & _MASK64)


# ---------------------------------------------------------------------------
# single binary tree


def gini(labels: Iterable[int]) -> float:
    """Gini impurity of a binary label multiset: 1 - p0^2 - p1^2."""
    labels = list(labels)
    if not labels:
        raise EmptySetError("gini needs at least one label")
    n = len(labels)
    ones = sum(1 for v in labels if v)
    return 1.0 - (ones / n) ** 2 - ((n - ones) / n) ** 2


def _gini_fraction(n: int, ones: int) -> Fraction:
    return Fraction(n * n - ones * ones - (n - ones) * (n - ones), n * n)


@dataclass
class TreeNode:
    """Tree node; ``feature`` is None at leaves.  Splits send feature value 0
    left and 1 right."""

    probability: float
    n_samples: int
    feature: int | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    indices: np.ndarray,
    depth: int,
    max_depth: int | None,
    min_samples_split: int,
    candidate_features,
) -> TreeNode:
    n = len(indices)
    ones = int(y[indices].sum())
    node = TreeNode(probability=ones / n, n_samples=n)
    if ones == 0 or ones == n or n < min_samples_split:
        return node
    if max_depth is not None and depth >= max_depth:
        return node

    best_feature = None
    best_key: Fraction | None = None
    best_split: tuple[np.ndarray, np.ndarray] | None = None
    for f in candidate_features():
        column = X[indices, f]
        left = indices[column == 0]
        right = indices[column == 1]
        if len(left) == 0 or len(right) == 0:
            continue
        # Weighted child impurity; the parent term is constant across
        # candidates, so minimizing this maximizes the Gini decrease.
        key = _gini_fraction(len(left), int(y[left].sum())) * len(left) + _gini_fraction(
            len(right), int(y[right].sum())
        ) * len(right)
        if best_key is None or key < best_key:
            best_feature, best_key, best_split = f, key, (left, right)
    if best_feature is None:
        return node

    node.feature = best_feature
    node.left = _grow(
        X, y, best_split[0], depth + 1, max_depth, min_samples_split, candidate_features
    )
    node.right = _grow(
        X, y, best_split[1], depth + 1, max_depth, min_samples_split, candidate_features
    )
    return node


def fit_tree(
    X,
    y,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    rng: Lcg64 | None = None,
    n_candidate_features: int | None = None,
) -> TreeNode:
    """Grow one binary classification tree on binary features.

    Impure nodes split on the best Gini decrease as long as some feature
    partitions them nontrivially, so consistent data is always fit
    exactly.  ``rng``/``n_candidate_features`` restrict each split to a
    random feature subset (used by forests).
    """
    X = _check_binary_matrix(X, "X")
    y = np.asarray(y).reshape(-1)
    if y.size and not np.isin(y, (0, 1)).all():
        raise ShapeMismatchError("y must contain only 0/1 labels")
    y = y.astype(np.int64, copy=False)
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatchError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if X.shape[0] == 0:
        raise ShapeMismatchError("need at least one sample")
    d = X.shape[1]
    if rng is not None and n_candidate_features is not None and n_candidate_features < d:
        k = max(1, n_candidate_features)
        candidates = lambda: sorted(rng.sample(d, k))
    else:
        candidates = lambda: range(d)
    return _grow(X, y, np.arange(X.shape[0]), 0, max_depth, min_samples_split, candidates)


def _leaf_for(node: TreeNode, row: np.ndarray) -> TreeNode:
    while not node.is_leaf:
        node = node.right if row[node.feature] else node.left
    return node


def tree_probability(node: TreeNode, row) -> float:
    """Training-set positive-class probability at the row's leaf."""
    return _leaf_for(node, np.asarray(row)).probability


def tree_nodes(root: TreeNode) -> list[list]:
    """Flatten a tree into preorder node records
    ``[feature, left, right, probability, n_samples]`` (-1 marks "none")."""
    nodes: list[list] = []

    def visit(node: TreeNode) -> int:
        index = len(nodes)
        nodes.append([-1, -1, -1, node.probability, node.n_samples])
        if node.feature is not None:
            nodes[index][0] = node.feature
            nodes[index][1] = visit(node.left)
            nodes[index][2] = visit(node.right)
        return index

    visit(root)
    return nodes


def tree_from_nodes(nodes: Sequence[Sequence]) -> TreeNode:
    def build(index: int) -> TreeNode:
        feature, left, right, probability, n_samples = nodes[index]
        node = TreeNode(probability=float(probability), n_samples=int(n_samples))
        if feature != -1:
            node.feature = int(feature)
            node.left = build(int(left))
            node.right = build(int(right))
        return node

    return build(0)


# ---------------------------------------------------------------------------
# input validation helpers


def _check_binary_matrix(X, name: str) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2:
        raise ShapeMismatchError(f"{name} must be a 2-D matrix, got {X.ndim}-D")
    if X.size and not np.isin(X, (0, 1)).all():
        raise ShapeMismatchError(f"{name} must contain only 0/1 values")
    return X.astype(np.int64, copy=False)


def _check_fit_inputs(X, Y) -> tuple[np.ndarray, np.ndarray]:
    X = _check_binary_matrix(X, "X")
    Y = _check_binary_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatchError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if X.shape[0] == 0:
        raise ShapeMismatchError("need at least one sample")
    if Y.shape[1] != len(TARGET_CAUSES):
        raise ShapeMismatchError(
            f"Y must have {len(TARGET_CAUSES)} cause columns, got {Y.shape[1]}"
        )
    return X, Y


def _check_predict_input(X, n_features: int) -> np.ndarray:
    X = _check_binary_matrix(X, "X")
    if X.shape[1] != n_features:
        raise DimensionMismatchError(
            f"model was fit on {n_features} features, got {X.shape[1]}"
        )
    return X


# ---------------------------------------------------------------------------
# estimators


class _CauseClassifierBase(BaseEstimator):
    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)

    def predict_causes(self, X) -> list[frozenset[FailureCause]]:
        """Predicted cause sets per row; an empty prediction reads as green."""
        return [targets_to_causes(row) for row in self.predict(X)]


class DecisionTreeCauseClassifier(_CauseClassifierBase):
    """Binary-relevance decision trees, one per failure cause."""

    def __init__(self, max_depth: int | None = None, min_samples_split: int = 2):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split

    def fit(self, X, Y) -> "DecisionTreeCauseClassifier":
        X, Y = _check_fit_inputs(X, Y)
        self.n_features_in_ = X.shape[1]
        self.target_causes_ = TARGET_CAUSES
        self.trees_ = [
            fit_tree(X, Y[:, t], self.max_depth, self.min_samples_split)
            for t in range(Y.shape[1])
        ]
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = _check_predict_input(X, self.n_features_in_)
        out = np.empty((X.shape[0], len(self.trees_)), dtype=float)
        for i, row in enumerate(X):
            for t, tree in enumerate(self.trees_):
                out[i, t] = tree_probability(tree, row)
        return out


class RandomForestCauseClassifier(_CauseClassifierBase):
    """Binary-relevance random forests: bootstrapped trees, random feature
    subsets per split, majority vote per cause."""

    def __init__(
        self,
        n_estimators: int = 100,
        bootstrap: bool = True,
        max_features: str | int = "sqrt",
        random_state: int = 0,
        max_depth: int | None = None,
        min_samples_split: int = 2,
    ):
        self.n_estimators = n_estimators
        self.bootstrap = bootstrap
        self.max_features = max_features
        self.random_state = random_state
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split

    def _subset_size(self, d: int) -> int:
        if self.max_features == "sqrt":
            return min(d, math.isqrt(d - 1) + 1 if d > 1 else 1)
        if self.max_features == "all":
            return d
        if isinstance(self.max_features, int) and self.max_features >= 1:
            return min(d, self.max_features)
        raise ValueError("max_features must be 'sqrt', 'all' or a positive int")

    def fit(self, X, Y) -> "RandomForestCauseClassifier":
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be positive")
        X, Y = _check_fit_inputs(X, Y)
        n, d = X.shape
        k = self._subset_size(d)
        self.n_features_in_ = d
        self.target_causes_ = TARGET_CAUSES
        self.forests_ = []
        for t in range(Y.shape[1]):
            trees = []
            for i in range(self.n_estimators):
                rng = Lcg64.substream(self.random_state, t * self.n_estimators + i)
                if self.bootstrap:
                    rows = np.array([rng.randbelow(n) for _ in range(n)], dtype=np.int64)
                else:
                    rows = np.arange(n)
                trees.append(
                    fit_tree(
                        X[rows],
                        Y[rows, t],
                        self.max_depth,
                        self.min_samples_split,
                        rng=rng,
                        n_candidate_features=k,
                    )
                )
            self.forests_.append(trees)
        return self

    def predict_proba(self, X) -> np.ndarray:
        """Per cause, the fraction of member trees voting for the cause."""
        X = _check_predict_input(X, self.n_features_in_)
        out = np.empty((X.shape[0], len(self.forests_)), dtype=float)
        for i, row in enumerate(X):
            for t, trees in enumerate(self.forests_):
                votes = sum(1 for tree in trees if tree_probability(tree, row) >= 0.5)
                out[i, t] = votes / len(trees)
        return out


# ---------------------------------------------------------------------------
# persistence

MODEL_SCHEMA_VERSION = 1


def model_to_dict(model) -> dict:
    if isinstance(model, DecisionTreeCauseClassifier):
        kind = "decision_tree"
        trees = [tree_nodes(t) for t in model.trees_]
    elif isinstance(model, RandomForestCauseClassifier):
        kind = "random_forest"
        trees = [[tree_nodes(t) for t in forest] for forest in model.forests_]
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    return {
        "schema_version": MODEL_SCHEMA_VERSION,
        "kind": kind,
        "params": model.get_params(),
        "n_features": model.n_features_in_,
        "targets": [c.code for c in model.target_causes_],
        "trees": trees,
    }


def model_from_dict(data: dict):
    kind = data["kind"]
    if kind == "decision_tree":
        model = DecisionTreeCauseClassifier(**data["params"])
        model.trees_ = [tree_from_nodes(nodes) for nodes in data["trees"]]
    elif kind == "random_forest":
        model = RandomForestCauseClassifier(**data["params"])
        model.forests_ = [
            [tree_from_nodes(nodes) for nodes in forest] for forest in data["trees"]
        ]
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    model.n_features_in_ = int(data["n_features"])
    model.target_causes_ = tuple(FailureCause(code) for code in data["targets"])
    return model


def dump_model(model) -> str:
    """Canonical JSON dump: same fitted model, same bytes."""
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))


def save_model(model, path) -> None:
    Path(path).write_text(dump_model(model) + "\n", encoding="utf-8")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# evaluation protocol


def leave_one_out_predictions(model, X, Y) -> np.ndarray:
    """Predict each sample from a model fit on all the others."""
    X, Y = _check_fit_inputs(X, Y)
    n = X.shape[0]
    if n < 2:
        raise ShapeMismatchError("leave-one-out needs at least two samples")
    keep = np.ones(n, dtype=bool)
    rows = []
    for i in range(n):
        keep[i] = False
        fold = clone(model).fit(X[keep], Y[keep])
        rows.append(fold.predict(X[i : i + 1])[0])
        keep[i] = True
    return np.vstack(rows)
