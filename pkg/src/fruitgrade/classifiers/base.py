"""Common classifier plumbing: specs, validation, the trained-model base."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ConfigError, DataError

KINDS = ("knn", "logistic", "linear-svm", "random-forest", "gbt", "mlp")

DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "knn": {"k": 5},
    "logistic": {"l2": 1e-4, "max_iter": 2000, "grad_tol": 1e-5},
    "linear-svm": {"l2": 1e-4, "eta0": 0.5, "epochs": 30},
    "random-forest": {"trees": 100, "min_leaf": 2, "bootstrap": True,
                      "max_features": "sqrt"},
    "gbt": {"rounds": 200, "depth": 3, "shrinkage": 0.1, "l2": 1.0},
    "mlp": {"hidden": 256, "lr": 0.02, "batch": 32, "momentum": 0.9,
            "max_epochs": 300, "patience": 30, "val_fraction": 0.1},
}


def _positive(params, key, kind):
    if params[key] <= 0:
        raise ConfigError(f"{kind}: {key} must be positive, got {params[key]}")


def _validate_params(kind: str, params: dict[str, Any]) -> dict[str, Any]:
    merged = dict(DEFAULT_PARAMS[kind])
    unknown = set(params) - set(merged)
    if unknown:
        raise ConfigError(f"{kind}: unknown hyperparameters {sorted(unknown)}")
    merged.update(params)
    if kind == "knn":
        if int(merged["k"]) < 1:
            raise ConfigError("knn: k must be >= 1")
        merged["k"] = int(merged["k"])
    elif kind == "logistic":
        _positive(merged, "l2", kind)
        _positive(merged, "max_iter", kind)
        _positive(merged, "grad_tol", kind)
    elif kind == "linear-svm":
        _positive(merged, "l2", kind)
        _positive(merged, "eta0", kind)
        _positive(merged, "epochs", kind)
    elif kind == "random-forest":
        if int(merged["trees"]) < 1:
            raise ConfigError("random-forest: trees must be >= 1")
        merged["trees"] = int(merged["trees"])
        if int(merged["min_leaf"]) < 1:
            raise ConfigError("random-forest: min_leaf must be >= 1")
        if merged["max_features"] != "sqrt":
            mf = int(merged["max_features"])
            if mf < 1:
                raise ConfigError("random-forest: max_features must be >= 1 or 'sqrt'")
            merged["max_features"] = mf
    elif kind == "gbt":
        if int(merged["rounds"]) < 0:
            raise ConfigError("gbt: rounds must be >= 0")
        _positive(merged, "depth", kind)
        _positive(merged, "shrinkage", kind)
        if merged["l2"] < 0:
            raise ConfigError("gbt: l2 must be >= 0")
    elif kind == "mlp":
        _positive(merged, "hidden", kind)
        _positive(merged, "lr", kind)
        _positive(merged, "batch", kind)
        _positive(merged, "max_epochs", kind)
        _positive(merged, "patience", kind)
        if not 0 < merged["val_fraction"] < 0.5:
            raise ConfigError("mlp: val_fraction must be in (0, 0.5)")
    return merged


@dataclass(frozen=True)
class ClassifierSpec:
    """A classifier kind plus its hyperparameters and training seed."""

    kind: str
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown classifier kind {self.kind!r} (known: {', '.join(KINDS)})")
        object.__setattr__(self, "params", _validate_params(self.kind, self.params))

    def describe(self) -> str:
        """Canonical provenance string, stable across runs."""
        inner = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return f"{self.kind}({inner};seed={self.seed})"


class TrainedClassifier:
    """Base for fitted models. Subclasses fill in batch prediction."""

    kind: str = ""
    supports_proba: bool = False

    def __init__(self, class_count: int, input_dim: int):
        self.class_count = int(class_count)
        self.input_dim = int(input_dim)

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DataError(
                f"{self.kind}: expected vectors of length {self.input_dim}, "
                f"got shape {X.shape}"
            )
        return X

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def proba_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def check_training_inputs(X: np.ndarray, y: np.ndarray,
                          n_classes: int | None) -> tuple[np.ndarray, np.ndarray, int]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise DataError("X must be 2-D (samples x features)")
    if y.shape != (X.shape[0],):
        raise DataError("y must align with X rows")
    if X.size and not np.isfinite(X).all():
        raise DataError("X contains non-finite values")
    if n_classes is None:
        n_classes = int(y.max()) + 1 if y.size else 0
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise DataError(f"labels outside [0, {n_classes})")
    if len(np.unique(y)) < 2:
        raise DataError("training labels contain a single class")
    if X.shape[0] < n_classes:
        raise DataError("fewer samples than classes")
    return X, y, n_classes


def stable_softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)
