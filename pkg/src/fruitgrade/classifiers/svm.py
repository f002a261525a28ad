"""Linear SVM: one-vs-rest hinge loss with L2, subgradient descent.

Epochs are shuffled deterministically from the training seed; the step
size follows eta_t = eta0 / (1 + l2 * eta0 * t) with t counting individual
sample updates. The bias is not regularized.
"""

from __future__ import annotations

import numpy as np

from .base import TrainedClassifier
from ..rng import Rng


class LinearSvmModel(TrainedClassifier):
    kind = "linear-svm"

    def __init__(self, W: np.ndarray, b: np.ndarray, class_count: int):
        super().__init__(class_count, W.shape[1])
        self.W = W  # (C, d)
        self.b = b

    def decision_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return X @ self.W.T + self.b

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision_batch(X), axis=1)


def train_linear_svm(X, y, n_classes, params, rng: Rng) -> LinearSvmModel:
    n, d = X.shape
    l2 = float(params["l2"])
    eta0 = float(params["eta0"])
    W = np.zeros((n_classes, d), dtype=np.float64)
    b = np.zeros(n_classes, dtype=np.float64)
    # one-vs-rest sign targets, (n, C)
    Y = np.full((n, n_classes), -1.0)
    Y[np.arange(n), y] = 1.0
    t = 0
    for _ in range(int(params["epochs"])):
        order = rng.permutation(n)
        for i in order:
            t += 1
            eta = eta0 / (1.0 + l2 * eta0 * t)
            x_i = X[i]
            margins = Y[i] * (W @ x_i + b)
            viol = margins < 1.0
            W *= 1.0 - eta * l2
            if viol.any():
                W[viol] += eta * Y[i, viol][:, None] * x_i
                b[viol] += eta * Y[i, viol]
    return LinearSvmModel(W, b, n_classes)
