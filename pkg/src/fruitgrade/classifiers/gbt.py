"""Gradient-boosted trees with second-order (Newton) leaf updates.

Logistic loss, one-vs-rest score chains for multiclass. Each round fits a
depth-limited regression tree to the gradient/hessian pairs; a leaf's
value is -G / (H + l2), scaled by the shrinkage factor. Scores start at
the base-rate log-odds, so a zero-round model predicts class frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .base import TrainedClassifier
from .cart import route
from ..rng import Rng


@dataclass
class RegTreeArrays:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # per-node leaf value

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


def _best_reg_split(Xn: np.ndarray, g: np.ndarray, h: np.ndarray, l2: float):
    """Maximize GL^2/(HL+l2) + GR^2/(HR+l2) - G^2/(H+l2) over strict splits."""
    m, f = Xn.shape
    if m < 2:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    sorted_x = np.take_along_axis(Xn, order, axis=0)
    GL = np.cumsum(g[order], axis=0)[:-1]
    HL = np.cumsum(h[order], axis=0)[:-1]
    G, H = float(g.sum()), float(h.sum())
    gain = GL**2 / (HL + l2) + (G - GL) ** 2 / (H - HL + l2) - G**2 / (H + l2)
    valid = sorted_x[1:] > sorted_x[:-1]
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))
    s, col = np.unravel_index(flat, gain.shape)
    if gain[s, col] <= 1e-12:
        return None
    # float32 quantization mirrors cart._best_split for stable round trips
    thr = float(np.float32(0.5 * (sorted_x[s, col] + sorted_x[s + 1, col])))
    if thr >= sorted_x[s + 1, col]:
        thr = float(np.float32(sorted_x[s, col]))
    return int(col), thr


def build_regression_tree(X, g, h, max_depth: int, l2: float) -> RegTreeArrays:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        G, H = float(g[idx].sum()), float(h[idx].sum())
        value[node] = -G / (H + l2)
        if depth >= max_depth:
            continue
        found = _best_reg_split(X[idx], g[idx], h[idx], l2)
        if found is None:
            continue
        col, thr = found
        mask = X[idx, col] <= thr
        if mask.all() or not mask.any():
            continue
        feature[node] = col
        threshold[node] = thr
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right[node], idx[~mask], depth + 1))
        stack.append((left[node], idx[mask], depth + 1))

    return RegTreeArrays(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.float64),
    )


def _tree_values(tree: RegTreeArrays, X: np.ndarray) -> np.ndarray:
    return tree.value[route(tree, X)]


class GbtModel(TrainedClassifier):
    kind = "gbt"
    supports_proba = True

    def __init__(self, base_scores, chains, shrinkage, class_count, input_dim,
                 loss_history=None):
        super().__init__(class_count, input_dim)
        self.base_scores = base_scores  # (n_chains,)
        self.chains = chains  # list of lists of RegTreeArrays
        self.shrinkage = shrinkage
        self.loss_history = loss_history or []

    def _scores(self, X: np.ndarray) -> np.ndarray:
        out = np.tile(self.base_scores, (X.shape[0], 1))
        for c, trees in enumerate(self.chains):
            for tree in trees:
                out[:, c] += self.shrinkage * _tree_values(tree, X)
        return out

    def proba_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        s = expit(self._scores(X))
        if self.class_count == 2:
            return np.stack([1.0 - s[:, 0], s[:, 0]], axis=1)
        return s / s.sum(axis=1, keepdims=True)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.proba_batch(X), axis=1)


def _logistic_loss(F: np.ndarray, Y: np.ndarray) -> float:
    p = np.clip(expit(F), 1e-12, 1.0 - 1e-12)
    return float(-np.mean(Y * np.log(p) + (1.0 - Y) * np.log(1.0 - p)))


def train_gbt(X, y, n_classes, params, rng: Rng) -> GbtModel:
    n, d = X.shape
    n_chains = 1 if n_classes == 2 else n_classes
    # per-chain binary indicator targets
    if n_chains == 1:
        Y = (y == 1).astype(np.float64)[:, None]
    else:
        Y = np.zeros((n, n_chains))
        Y[np.arange(n), y] = 1.0

    rate = np.clip(Y.mean(axis=0), 1e-12, 1.0 - 1e-12)
    base = np.log(rate / (1.0 - rate))
    F = np.tile(base, (n, 1))
    chains: list[list[RegTreeArrays]] = [[] for _ in range(n_chains)]
    l2 = float(params["l2"])
    nu = float(params["shrinkage"])
    history = [_logistic_loss(F, Y)]
    for _ in range(int(params["rounds"])):
        for c in range(n_chains):
            p = expit(F[:, c])
            g = p - Y[:, c]
            h = np.maximum(p * (1.0 - p), 1e-16)
            tree = build_regression_tree(X, g, h, int(params["depth"]), l2)
            chains[c].append(tree)
            F[:, c] += nu * _tree_values(tree, X)
        history.append(_logistic_loss(F, Y))
    return GbtModel(base, chains, nu, n_classes, d, loss_history=history)
