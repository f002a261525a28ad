"""One-hidden-layer perceptron: ReLU, softmax cross-entropy.

Mini-batch gradient descent with classical momentum. A held-out slice of
the training data drives early stopping: no validation-loss improvement
for `patience` epochs ends training and the best-epoch weights are
restored.
"""

from __future__ import annotations

import math

import numpy as np

from .base import TrainedClassifier, stable_softmax
from ..rng import Rng


def init_params(d: int, hidden: int, n_classes: int, rng: Rng) -> list[np.ndarray]:
    W1 = rng.normal(d * hidden).reshape(d, hidden) * math.sqrt(2.0 / d)
    b1 = np.zeros(hidden)
    W2 = rng.normal(hidden * n_classes).reshape(hidden, n_classes) * math.sqrt(1.0 / hidden)
    b2 = np.zeros(n_classes)
    return [W1, b1, W2, b2]


def forward_loss(params, X, y) -> float:
    W1, b1, W2, b2 = params
    hidden = np.maximum(X @ W1 + b1, 0.0)
    P = stable_softmax(hidden @ W2 + b2)
    return float(-np.log(P[np.arange(len(y)), y] + 1e-300).mean())


def loss_and_grads(params, X, y):
    W1, b1, W2, b2 = params
    n = X.shape[0]
    pre = X @ W1 + b1
    hidden = np.maximum(pre, 0.0)
    P = stable_softmax(hidden @ W2 + b2)
    loss = float(-np.log(P[np.arange(n), y] + 1e-300).mean())
    delta2 = P.copy()
    delta2[np.arange(n), y] -= 1.0
    delta2 /= n
    gW2 = hidden.T @ delta2
    gb2 = delta2.sum(axis=0)
    delta1 = (delta2 @ W2.T) * (pre > 0.0)
    gW1 = X.T @ delta1
    gb1 = delta1.sum(axis=0)
    return loss, [gW1, gb1, gW2, gb2]


class MlpModel(TrainedClassifier):
    kind = "mlp"
    supports_proba = True

    def __init__(self, params, class_count: int):
        super().__init__(class_count, params[0].shape[0])
        self.params = params

    def proba_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        W1, b1, W2, b2 = self.params
        hidden = np.maximum(X @ W1 + b1, 0.0)
        return stable_softmax(hidden @ W2 + b2)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.proba_batch(X), axis=1)


def train_mlp(X, y, n_classes, params, rng: Rng) -> MlpModel:
    n, d = X.shape
    hidden = int(params["hidden"])
    lr = float(params["lr"])
    momentum = float(params["momentum"])
    batch = int(params["batch"])
    patience = int(params["patience"])

    holdout = max(1, int(round(params["val_fraction"] * n)))
    split_order = rng.spawn("holdout").permutation(n)
    val_idx, train_idx = split_order[:holdout], split_order[holdout:]
    if len(train_idx) == 0:  # degenerate tiny sets: validate on the data itself
        train_idx = split_order
    Xt, yt = X[train_idx], y[train_idx]
    Xv, yv = X[val_idx], y[val_idx]

    weights = init_params(d, hidden, n_classes, rng.spawn("init"))
    velocity = [np.zeros_like(w) for w in weights]
    best = [w.copy() for w in weights]
    best_val = forward_loss(weights, Xv, yv)
    stale = 0
    epoch_rng = rng.spawn("epochs")
    for _ in range(int(params["max_epochs"])):
        order = epoch_rng.permutation(len(Xt))
        for start in range(0, len(Xt), batch):
            sel = order[start : start + batch]
            _, grads = loss_and_grads(weights, Xt[sel], yt[sel])
            for w, v, g in zip(weights, velocity, grads):
                v *= momentum
                v -= lr * g
                w += v
        val = forward_loss(weights, Xv, yv)
        if val < best_val - 1e-12:
            best_val = val
            best = [w.copy() for w in weights]
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    return MlpModel(best, n_classes)
