"""The experiment protocol: stratified splits, seeded repetitions,
balanced subsampling, learning curves.

The split is derived from the master seed alone and reused across
repetitions; only classifier seeds (and subsample draws) vary per
repetition, each derived with the documented counter mix, so adding
repetitions never perturbs earlier ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .classifiers import ClassifierSpec, accuracy, train
from .embeddings import EmbeddingSet
from .errors import ConfigError, DataError, FruitgradeError
from .rng import Rng, mix64

DEFAULT_FRACTIONS = (0.64, 0.16, 0.20)


@dataclass(frozen=True)
class ExperimentConfig:
    classifiers: tuple[ClassifierSpec, ...]
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
    repetitions: int = 5
    subsample_sizes: tuple[int, ...] | None = None
    master_seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        if not self.classifiers:
            raise ConfigError("experiment needs at least one classifier")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {self.fractions}")
        if any(f < 0 for f in self.fractions):
            raise ConfigError("split fractions must be nonnegative")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.subsample_sizes is not None:
            sizes = tuple(self.subsample_sizes)
            if any(s < 1 for s in sizes):
                raise ConfigError("subsample sizes must be positive")
            if list(sizes) != sorted(sizes):
                raise ConfigError("subsample sizes must be ascending")


@dataclass(frozen=True)
class ReportCell:
    classifier: str  # canonical spec string
    size: int  # training-set size used
    repetition: int
    seed: int
    accuracy: float


@dataclass(frozen=True)
class ExperimentReport:
    cells: tuple[ReportCell, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def aggregate(self) -> list[tuple[str, int, float, float | None, int]]:
        """(classifier, size, mean, std-or-None, n_runs), canonically sorted.

        std is the sample standard deviation (ddof=1), absent for a single
        run.
        """
        groups: dict[tuple[str, int], list[float]] = {}
        for cell in self.cells:
            groups.setdefault((cell.classifier, cell.size), []).append(cell.accuracy)
        out = []
        for (clf, size), accs in sorted(groups.items()):
            mean = float(np.mean(accs))
            std = float(np.std(accs, ddof=1)) if len(accs) >= 2 else None
            out.append((clf, size, mean, std, len(accs)))
        return out


def _as_labels(data) -> np.ndarray:
    if isinstance(data, EmbeddingSet):
        return np.asarray(data.label_idx)
    if hasattr(data, "label_indices"):
        return data.label_indices()
    return np.asarray(data, dtype=np.int64)


def _apportion(n: int, fractions: tuple[float, ...]) -> list[int]:
    """Largest-remainder seat assignment of n items to the fractions.

    Remainder ties resolve in split order (train before val before test).
    """
    quotas = [n * f for f in fractions]
    counts = [int(np.floor(q)) for q in quotas]
    remainders = [q - c for q, c in zip(quotas, counts)]
    for _ in range(n - sum(counts)):
        best = max(range(len(fractions)), key=lambda i: (remainders[i], -i))
        counts[best] += 1
        remainders[best] = -1.0
    return counts


def stratified_split(
    data,
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS,
    seed: int = 0,
    class_names: tuple[str, ...] | None = None,
):
    """Disjoint, exhaustive (train, val, test) index arrays.

    Per-class counts follow largest-remainder apportionment of the
    fractions; assignment within a class is a seeded shuffle.
    """
    labels = _as_labels(data)
    if class_names is None and isinstance(data, EmbeddingSet):
        class_names = data.class_names
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")
    n_classes = int(labels.max()) + 1 if labels.size else 0
    rng = Rng(mix64(seed, "stratified-split"))
    parts: tuple[list[int], list[int], list[int]] = ([], [], [])
    for c in range(n_classes):
        idx = np.nonzero(labels == c)[0]
        if len(idx) < 3:
            name = class_names[c] if class_names else str(c)
            raise DataError(f"class {name!r} has only {len(idx)} samples, need >= 3")
        counts = _apportion(len(idx), fractions)
        shuffled = idx[rng.spawn("class", c).permutation(len(idx))]
        start = 0
        for part, count in zip(parts, counts):
            part.extend(shuffled[start : start + count].tolist())
            start += count
    return tuple(np.array(sorted(p), dtype=np.int64) for p in parts)


def balanced_subsample(
    pool: np.ndarray, labels: np.ndarray, n: int, seed: int
) -> np.ndarray:
    """n indices from `pool`, drawn without replacement with per-sample
    weight proportional to 1 / class frequency inside the pool."""
    pool = np.asarray(pool, dtype=np.int64)
    if n > len(pool):
        raise DataError(f"subsample size {n} exceeds pool of {len(pool)}")
    if n == len(pool):
        return np.sort(pool)
    labels = np.asarray(labels, dtype=np.int64)
    pool_labels = labels[pool]
    counts = np.bincount(pool_labels)
    weights = 1.0 / counts[pool_labels]
    rng = Rng(mix64(seed, "balanced-subsample"))
    picked = rng.weighted_sample_without_replacement(weights, n)
    return np.sort(pool[picked])


def _standardizer(X_train: np.ndarray):
    mean = X_train.mean(axis=0)
    std = X_train.std(axis=0)
    std[std == 0] = 1.0
    return lambda X: (X - mean) / std


def _base_metadata(embeddings: EmbeddingSet, cfg: ExperimentConfig) -> dict[str, str]:
    md = {
        "code_version": __version__,
        "embedding_model": embeddings.model_tag,
        "embedding_dim": str(embeddings.dim),
        "samples": str(len(embeddings)),
        "classes": ",".join(embeddings.class_names),
        "fractions": ",".join(repr(f) for f in cfg.fractions),
        "repetitions": str(cfg.repetitions),
        "master_seed": str(cfg.master_seed),
        "standardize": str(cfg.standardize).lower(),
    }
    for i, spec in enumerate(cfg.classifiers):
        md[f"classifier.{i}"] = spec.describe()
    if cfg.subsample_sizes:
        md["subsample_sizes"] = ",".join(str(s) for s in cfg.subsample_sizes)
    return md


def _run_cells(embeddings: EmbeddingSet, cfg: ExperimentConfig,
               sizes: tuple[int, ...] | None) -> ExperimentReport:
    X = embeddings.vectors.astype(np.float64)
    y = np.asarray(embeddings.label_idx)
    train_idx, val_idx, test_idx = stratified_split(
        embeddings, cfg.fractions, seed=cfg.master_seed
    )
    if len(test_idx) == 0:
        raise DataError("test split is empty")
    size_list = list(sizes) if sizes else [len(train_idx)]
    if any(s > len(train_idx) for s in size_list):
        raise ConfigError(
            f"subsample sizes {size_list} exceed the train pool ({len(train_idx)})"
        )

    cells: list[ReportCell] = []
    failures: list[str] = []
    total = 0
    for spec in cfg.classifiers:
        for size in size_list:
            for r in range(cfg.repetitions):
                total += 1
                seed_r = mix64(cfg.master_seed, r)
                if sizes:
                    sub_seed = mix64(cfg.master_seed, "subsample", size, r)
                    sub = balanced_subsample(train_idx, y, size, sub_seed)
                else:
                    sub = train_idx
                rep_spec = replace(spec, seed=seed_r)
                Xtr, ytr = X[sub], y[sub]
                Xte = X[test_idx]
                if cfg.standardize:
                    norm = _standardizer(Xtr)
                    Xtr, Xte = norm(Xtr), norm(Xte)
                try:
                    model = train(rep_spec, Xtr, ytr,
                                  n_classes=len(embeddings.class_names))
                    acc = accuracy(model, Xte, y[test_idx])
                except FruitgradeError as exc:
                    failures.append(f"{spec.describe()} size={size} rep={r}: {exc}")
                    continue
                cells.append(
                    ReportCell(
                        classifier=spec.describe(),
                        size=int(size),
                        repetition=r,
                        seed=seed_r,
                        accuracy=acc,
                    )
                )
    if failures and len(failures) > 0.20 * total:
        raise DataError(
            f"{len(failures)} of {total} training runs failed: " + "; ".join(failures)
        )
    metadata = _base_metadata(embeddings, cfg)
    metadata["train_pool"] = str(len(train_idx))
    metadata["val_size"] = str(len(val_idx))
    metadata["test_size"] = str(len(test_idx))
    if failures:
        metadata["failures"] = "; ".join(failures)
    ordered = tuple(sorted(cells, key=lambda c: (c.classifier, c.size, c.repetition)))
    return ExperimentReport(cells=ordered, metadata=metadata)


def run_repeated(embeddings: EmbeddingSet, cfg: ExperimentConfig) -> ExperimentReport:
    """Full-train-split experiment, R repetitions per classifier."""
    return _run_cells(embeddings, cfg, sizes=None)


def learning_curve(embeddings: EmbeddingSet, cfg: ExperimentConfig) -> ExperimentReport:
    """Accuracy at each training-set size; a fresh balanced subsample per
    repetition, validation and test splits fixed at full size."""
    if not cfg.subsample_sizes:
        return run_repeated(embeddings, cfg)
    return _run_cells(embeddings, cfg, sizes=tuple(cfg.subsample_sizes))
