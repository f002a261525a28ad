"""The shallow classifier zoo behind one train/predict contract."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError
from ..rng import Rng
from .base import DEFAULT_PARAMS, KINDS, ClassifierSpec, TrainedClassifier, check_training_inputs
from .forest import train_random_forest
from .gbt import train_gbt
from .io import load_model, save_model
from .knn import train_knn
from .logistic import train_logistic
from .mlp import train_mlp
from .svm import train_linear_svm

_TRAINERS = {
    "knn": train_knn,
    "logistic": train_logistic,
    "linear-svm": train_linear_svm,
    "random-forest": train_random_forest,
    "gbt": train_gbt,
    "mlp": train_mlp,
}


def train(spec: ClassifierSpec, X: np.ndarray, y: np.ndarray,
          n_classes: int | None = None) -> TrainedClassifier:
    """Fit one classifier; deterministic given (spec.seed, X, y)."""
    X, y, n_classes = check_training_inputs(X, y, n_classes)
    rng = Rng(spec.seed).spawn(spec.kind)
    model = _TRAINERS[spec.kind](X, y, n_classes, spec.params, rng)
    model.spec = spec
    return model


def predict(model: TrainedClassifier, x: np.ndarray) -> int:
    """Label index for one vector; ties resolve to the lowest label."""
    return int(model.predict_batch(np.asarray(x))[0])


def predict_proba(model: TrainedClassifier, x: np.ndarray) -> np.ndarray:
    """Class probability vector; only for kinds that model probabilities."""
    if not model.supports_proba:
        raise ConfigError(f"{model.kind} does not provide class probabilities")
    return model.proba_batch(np.asarray(x))[0]


def accuracy(model: TrainedClassifier, X: np.ndarray, y: np.ndarray) -> float:
    """Fraction of exact label matches over a nonempty test set."""
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        raise DataError("accuracy needs a nonempty test set")
    return float(np.mean(model.predict_batch(X) == y))


__all__ = [
    "KINDS",
    "DEFAULT_PARAMS",
    "ClassifierSpec",
    "TrainedClassifier",
    "train",
    "predict",
    "predict_proba",
    "accuracy",
    "save_model",
    "load_model",
]
