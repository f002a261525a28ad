"""Principal component analysis via SVD of the centered data matrix.

Explained variances use the population (1/n) convention; only ratios and
orderings matter downstream. Component signs are fixed so the
largest-magnitude entry of each component is positive, which keeps plots
and fixtures reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericError


@dataclass(frozen=True)
class PCAProjection:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), nonincreasing

    def __post_init__(self):
        k = self.components.shape[0]
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(k), atol=1e-5):
            raise NumericError("PCA components are not orthonormal")
        ev = self.explained_variance
        if np.any(ev < -1e-12) or np.any(np.diff(ev) > 1e-12):
            raise NumericError("explained variances must be nonnegative, descending")

    @property
    def k(self) -> int:
        return self.components.shape[0]


def pca_fit(X: np.ndarray, k: int) -> PCAProjection:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("PCA input must be 2-D")
    n, d = X.shape
    if n < 2:
        raise DataError("PCA needs at least 2 samples")
    if not (1 <= k <= min(n - 1, d)):
        raise ConfigError(f"k={k} outside valid range [1, {min(n - 1, d)}]")
    if not np.isfinite(X).all():
        raise DataError("PCA input contains non-finite values")
    mean = X.mean(axis=0)
    centered = X - mean
    if np.allclose(centered, 0.0, atol=1e-15):
        raise NumericError("zero-variance data: PCA undefined")
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:k].copy()
    variances = (s[:k] ** 2) / n
    # deterministic sign: largest-magnitude entry positive
    for row in components:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return PCAProjection(mean=mean, components=components,
                         explained_variance=variances)


def pca_transform(projection: PCAProjection, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != projection.mean.shape[0]:
        raise DataError(
            f"expected {projection.mean.shape[0]}-dim vectors, got {X.shape[1]}"
        )
    scores = (X - projection.mean) @ projection.components.T
    return scores[0] if single else scores


def total_variance(X: np.ndarray) -> float:
    """Population variance summed over dimensions."""
    X = np.asarray(X, dtype=np.float64)
    return float(((X - X.mean(axis=0)) ** 2).sum() / X.shape[0])
