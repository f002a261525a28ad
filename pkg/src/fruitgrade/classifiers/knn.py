"""K-nearest neighbors on raw embedding distances."""

from __future__ import annotations

import numpy as np

from .base import TrainedClassifier


class KnnModel(TrainedClassifier):
    kind = "knn"

    def __init__(self, X: np.ndarray, y: np.ndarray, k: int, class_count: int):
        super().__init__(class_count, X.shape[1])
        self.X = X
        self.y = y
        self.k = min(k, X.shape[0])

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        out = np.empty(X.shape[0], dtype=np.int64)
        train_sq = np.einsum("ij,ij->i", self.X, self.X)
        for start in range(0, X.shape[0], 256):
            chunk = X[start : start + 256]
            d2 = train_sq[None, :] - 2.0 * (chunk @ self.X.T)
            d2 += np.einsum("ij,ij->i", chunk, chunk)[:, None]
            # stable sort: equal distances resolve to the earlier training sample
            nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
            votes = self.y[nearest]
            for row, vote_row in enumerate(votes):
                counts = np.bincount(vote_row, minlength=self.class_count)
                out[start + row] = int(np.argmax(counts))  # ties: lowest label
        return out


def train_knn(X, y, n_classes, params, rng) -> KnnModel:
    return KnnModel(X.copy(), y.copy(), params["k"], n_classes)
