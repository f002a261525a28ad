"""Random forest over the CART builder in cart.py.

Each tree sees a bootstrap resample and sqrt(d) candidate features per
split. Probabilities average the per-tree leaf class distributions.
"""

from __future__ import annotations

import math

import numpy as np

from .base import TrainedClassifier
from .cart import TreeArrays, build_classification_tree, tree_dist
from ..rng import Rng


class RandomForestModel(TrainedClassifier):
    kind = "random-forest"
    supports_proba = True

    def __init__(self, trees: list[TreeArrays], class_count: int, input_dim: int):
        super().__init__(class_count, input_dim)
        self.trees = trees

    def proba_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        acc = np.zeros((X.shape[0], self.class_count))
        for tree in self.trees:
            acc += tree_dist(tree, X)
        return acc / len(self.trees)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.proba_batch(X), axis=1)


def train_random_forest(X, y, n_classes, params, rng: Rng) -> RandomForestModel:
    n, d = X.shape
    if params["max_features"] == "sqrt":
        max_features = max(1, int(math.sqrt(d)))
    else:
        max_features = min(int(params["max_features"]), d)
    trees = []
    for t in range(params["trees"]):
        tree_rng = rng.spawn("tree", t)
        if params["bootstrap"]:
            idx = tree_rng.integers(n, n)
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y
        trees.append(
            build_classification_tree(
                Xb, yb, n_classes, tree_rng.spawn("splits"),
                max_features, int(params["min_leaf"]),
            )
        )
    return RandomForestModel(trees, n_classes, d)
