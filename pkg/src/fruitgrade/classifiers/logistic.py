"""Multinomial logistic regression, full-batch gradient descent.

Backtracking (Armijo) line search picks the step each iteration; training
stops when the gradient infinity norm drops under grad_tol or after
max_iter iterations. L2 applies to weights only, never the bias.
"""

from __future__ import annotations

import numpy as np

from .base import TrainedClassifier, stable_softmax


def loss_and_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray,
                  n_classes: int, l2: float) -> tuple[float, np.ndarray]:
    """Cross-entropy + 0.5*l2*||W||^2 and its gradient, on flat params.

    Layout: params = [W.ravel(), b], W of shape (d, C).
    """
    n, d = X.shape
    W = params[: d * n_classes].reshape(d, n_classes)
    b = params[d * n_classes :]
    logits = X @ W + b
    P = stable_softmax(logits)
    eps = 1e-300
    ll = -np.log(P[np.arange(n), y] + eps).mean()
    loss = ll + 0.5 * l2 * float(np.sum(W * W))
    G = P.copy()
    G[np.arange(n), y] -= 1.0
    G /= n
    grad_W = X.T @ G + l2 * W
    grad_b = G.sum(axis=0)
    return float(loss), np.concatenate([grad_W.ravel(), grad_b])


class LogisticModel(TrainedClassifier):
    kind = "logistic"
    supports_proba = True

    def __init__(self, W: np.ndarray, b: np.ndarray, class_count: int):
        super().__init__(class_count, W.shape[0])
        self.W = W
        self.b = b

    def proba_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return stable_softmax(X @ self.W + self.b)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.proba_batch(X), axis=1)


def train_logistic(X, y, n_classes, params, rng) -> LogisticModel:
    n, d = X.shape
    l2 = float(params["l2"])
    w = np.zeros(d * n_classes + n_classes, dtype=np.float64)
    loss, grad = loss_and_grad(w, X, y, n_classes, l2)
    for _ in range(int(params["max_iter"])):
        if np.abs(grad).max() < params["grad_tol"]:
            break
        g2 = float(grad @ grad)
        step = 1.0
        for _ in range(60):
            trial = w - step * grad
            trial_loss, trial_grad = loss_and_grad(trial, X, y, n_classes, l2)
            if trial_loss <= loss - 1e-4 * step * g2:
                break
            step *= 0.5
        w, loss, grad = trial, trial_loss, trial_grad
    W = w[: d * n_classes].reshape(d, n_classes)
    b = w[d * n_classes :]
    return LogisticModel(W, b, n_classes)
