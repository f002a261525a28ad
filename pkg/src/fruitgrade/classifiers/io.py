"""Trained-model blobs in the shared tensor-container format.

Every learned array is stored as float32; integer node indices fit
exactly. Predictions after a round trip match the original up to float32
precision of the stored parameters.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..container import read_tensors, write_tensors
from ..errors import StorageError
from .cart import TreeArrays
from .forest import RandomForestModel
from .gbt import GbtModel, RegTreeArrays
from .knn import KnnModel
from .logistic import LogisticModel
from .mlp import MlpModel
from .svm import LinearSvmModel

FORMAT_VERSION = 1.0

KIND_CODES = {
    "knn": 0.0,
    "logistic": 1.0,
    "linear-svm": 2.0,
    "random-forest": 3.0,
    "gbt": 4.0,
    "mlp": 5.0,
}
CODE_KINDS = {v: k for k, v in KIND_CODES.items()}


def _tree_state(prefix: str, tree) -> dict[str, np.ndarray]:
    state = {
        prefix + "feature": tree.feature.astype(np.float32),
        prefix + "threshold": tree.threshold.astype(np.float32),
        prefix + "left": tree.left.astype(np.float32),
        prefix + "right": tree.right.astype(np.float32),
    }
    if isinstance(tree, TreeArrays):
        state[prefix + "dist"] = tree.dist.astype(np.float32)
    else:
        state[prefix + "value"] = tree.value.astype(np.float32)
    return state


def _tree_from_state(t: dict[str, np.ndarray], prefix: str, regression: bool):
    common = dict(
        feature=t[prefix + "feature"].astype(np.int32),
        threshold=t[prefix + "threshold"].astype(np.float64),
        left=t[prefix + "left"].astype(np.int32),
        right=t[prefix + "right"].astype(np.int32),
    )
    if regression:
        return RegTreeArrays(value=t[prefix + "value"].astype(np.float64), **common)
    return TreeArrays(dist=t[prefix + "dist"].astype(np.float64), **common)


def save_model(path: str | Path, model) -> None:
    state: dict[str, np.ndarray] = {
        "meta.format": np.array([FORMAT_VERSION], dtype=np.float32),
        "meta.kind": np.array([KIND_CODES[model.kind]], dtype=np.float32),
        "meta.classes": np.array([model.class_count], dtype=np.float32),
        "meta.dim": np.array([model.input_dim], dtype=np.float32),
    }
    if isinstance(model, KnnModel):
        state["knn.X"] = model.X.astype(np.float32)
        state["knn.y"] = model.y.astype(np.float32)
        state["knn.k"] = np.array([model.k], dtype=np.float32)
    elif isinstance(model, LogisticModel):
        state["logistic.W"] = model.W.astype(np.float32)
        state["logistic.b"] = model.b.astype(np.float32)
    elif isinstance(model, LinearSvmModel):
        state["svm.W"] = model.W.astype(np.float32)
        state["svm.b"] = model.b.astype(np.float32)
    elif isinstance(model, RandomForestModel):
        state["forest.count"] = np.array([len(model.trees)], dtype=np.float32)
        for i, tree in enumerate(model.trees):
            state.update(_tree_state(f"forest.t{i:04d}.", tree))
    elif isinstance(model, GbtModel):
        state["gbt.base"] = np.asarray(model.base_scores, dtype=np.float32).ravel()
        state["gbt.shrinkage"] = np.array([model.shrinkage], dtype=np.float32)
        state["gbt.layout"] = np.array(
            [len(model.chains), len(model.chains[0]) if model.chains else 0],
            dtype=np.float32,
        )
        for c, trees in enumerate(model.chains):
            for r, tree in enumerate(trees):
                state.update(_tree_state(f"gbt.c{c:02d}.r{r:04d}.", tree))
    elif isinstance(model, MlpModel):
        for name, arr in zip(("W1", "b1", "W2", "b2"), model.params):
            state[f"mlp.{name}"] = arr.astype(np.float32)
    else:
        raise StorageError(f"cannot serialize model of type {type(model).__name__}")
    write_tensors(path, state)


def load_model(path: str | Path):
    t = read_tensors(path)
    try:
        version = float(t["meta.format"][0])
        kind = CODE_KINDS[float(t["meta.kind"][0])]
        classes = int(t["meta.classes"][0])
        dim = int(t["meta.dim"][0])
    except KeyError as exc:
        raise StorageError(f"{path}: not a model blob ({exc})") from exc
    if version != FORMAT_VERSION:
        raise StorageError(f"{path}: unsupported model format {version}")

    if kind == "knn":
        return KnnModel(
            t["knn.X"].astype(np.float64), t["knn.y"].astype(np.int64),
            int(t["knn.k"][0]), classes,
        )
    if kind == "logistic":
        return LogisticModel(
            t["logistic.W"].astype(np.float64), t["logistic.b"].astype(np.float64), classes
        )
    if kind == "linear-svm":
        return LinearSvmModel(
            t["svm.W"].astype(np.float64), t["svm.b"].astype(np.float64), classes
        )
    if kind == "random-forest":
        count = int(t["forest.count"][0])
        trees = [_tree_from_state(t, f"forest.t{i:04d}.", regression=False)
                 for i in range(count)]
        return RandomForestModel(trees, classes, dim)
    if kind == "gbt":
        n_chains, n_rounds = (int(v) for v in t["gbt.layout"])
        chains = [
            [_tree_from_state(t, f"gbt.c{c:02d}.r{r:04d}.", regression=True)
             for r in range(n_rounds)]
            for c in range(n_chains)
        ]
        return GbtModel(
            t["gbt.base"].astype(np.float64), chains,
            float(t["gbt.shrinkage"][0]), classes, dim,
        )
    if kind == "mlp":
        params = [t[f"mlp.{n}"].astype(np.float64) for n in ("W1", "b1", "W2", "b2")]
        return MlpModel(params, classes)
    raise StorageError(f"{path}: unknown model kind {kind}")
