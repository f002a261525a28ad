"""Classification trees: Gini impurity, exact greedy splits on midpoints.

Nodes live in flat parallel arrays (feature, threshold, left, right, class
distribution) so trees serialize directly into the tensor container and
route vectorized. Growth stops at purity, at nodes too small to split with
min_leaf samples per child, or when no feature offers impurity decrease.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import Rng


@dataclass
class TreeArrays:
    feature: np.ndarray  # int32, -1 marks a leaf
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    dist: np.ndarray  # (n_nodes, C) float64 class distribution

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


def _best_split(Xn: np.ndarray, y_node: np.ndarray, n_classes: int,
                min_leaf: int):
    """Best (column, threshold, score-gain) over the given feature columns.

    Returns None when no valid strict split exists. Score is the negative
    weighted Gini up to constants: sum_c lc^2/s + sum_c rc^2/(m-s),
    maximized.
    """
    m, f = Xn.shape
    if m < 2 * min_leaf:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    sorted_x = np.take_along_axis(Xn, order, axis=0)
    onehot = np.eye(n_classes, dtype=np.float64)[y_node[order]]  # (m, f, C)
    lc = np.cumsum(onehot, axis=0)[:-1]  # prefix counts, split after s = 1..m-1
    tc = lc[-1] + onehot[-1]  # totals per column (identical across columns)
    sizes = np.arange(1, m, dtype=np.float64)[:, None]
    lsum = np.sum(lc * lc, axis=2)
    rsum = np.sum((tc[None, :, :] - lc) ** 2, axis=2)
    score = lsum / sizes + rsum / (m - sizes)

    valid = sorted_x[1:] > sorted_x[:-1]
    s_idx = np.arange(1, m)[:, None]
    valid &= (s_idx >= min_leaf) & (s_idx <= m - min_leaf)
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    flat = int(np.argmax(score))
    s, col = np.unravel_index(flat, score.shape)
    base = float(np.sum(tc[0] ** 2) / m)
    gain = float(score[s, col]) - base
    if gain <= 1e-12:
        return None
    # quantize to float32 so serialized trees route identically; fall back
    # to the lower value if the midpoint rounds onto the upper one
    thr = float(np.float32(0.5 * (sorted_x[s, col] + sorted_x[s + 1, col])))
    if thr >= sorted_x[s + 1, col]:
        thr = float(np.float32(sorted_x[s, col]))
    return int(col), thr, gain


def build_classification_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    rng: Rng,
    max_features: int,
    min_leaf: int,
) -> TreeArrays:
    n, d = X.shape
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    dist: list[np.ndarray] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        dist.append(np.zeros(n_classes))
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        dist[node] = counts / counts.sum()
        if counts.max() == len(idx) or len(idx) < 2 * min_leaf:
            continue
        if max_features >= d:
            cols = np.arange(d)
        else:
            cols = rng.permutation(d)[:max_features]
        found = _best_split(X[np.ix_(idx, cols)], y[idx], n_classes, min_leaf)
        if found is None:
            continue
        col, thr, _ = found
        feat = int(cols[col])
        mask = X[idx, feat] <= thr
        if mask.all() or not mask.any():  # f32 quantization collapsed the split
            continue
        feature[node] = feat
        threshold[node] = thr
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right[node], idx[~mask]))
        stack.append((left[node], idx[mask]))

    return TreeArrays(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        dist=np.vstack(dist),
    )


def route(tree: TreeArrays, X: np.ndarray) -> np.ndarray:
    """Leaf index for every row of X."""
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        feat = tree.feature[node]
        active = feat >= 0
        if not active.any():
            return node
        rows = np.nonzero(active)[0]
        f = feat[rows]
        go_left = X[rows, f] <= tree.threshold[node[rows]]
        node[rows] = np.where(go_left, tree.left[node[rows]], tree.right[node[rows]])


def tree_dist(tree: TreeArrays, X: np.ndarray) -> np.ndarray:
    return tree.dist[route(tree, X)]
