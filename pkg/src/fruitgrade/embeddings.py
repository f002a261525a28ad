"""Per-sample embedding vectors: extraction, caching, CSV interchange.

The cache is one tensor container per (model, preprocess recipe), with one
entry per sample named ``<sample_id>@<content-hash>``. Editing an image
changes its hash and forces re-embedding of just that sample; untouched
warm-cache runs execute zero forward passes and leave the file byte
identical.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .container import read_tensors, write_tensors
from .datasets import DatasetManifest
from .errors import DataError
from .imageprep import decode_image, preprocess
from .vit.model import forward_cls
from .vit.weights import WeightStore

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingSet:
    """A feature matrix aligned with sample ids and label indices."""

    model_tag: str
    class_names: tuple[str, ...]
    ids: tuple[str, ...]
    vectors: np.ndarray  # (n, dim) float32
    label_idx: np.ndarray  # (n,) int64

    def __post_init__(self):
        if self.vectors.ndim != 2:
            raise DataError("embedding matrix must be 2-D")
        if len(self.ids) != self.vectors.shape[0] or len(self.ids) != len(self.label_idx):
            raise DataError("embedding rows, ids, and labels disagree in length")
        if self.vectors.size and not np.isfinite(self.vectors).all():
            raise DataError("embedding matrix contains non-finite values")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def row(self, sample_id: str) -> np.ndarray:
        return self.vectors[self.ids.index(sample_id)]

    def labels(self) -> list[str]:
        return [self.class_names[i] for i in self.label_idx]


def _content_hash(path: Path) -> str:
    try:
        return hashlib.sha256(path.read_bytes()).hexdigest()[:16]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _cache_path(cache_dir: Path, model_tag: str, spec_key: str) -> Path:
    spec_hash = hashlib.sha256(spec_key.encode("utf-8")).hexdigest()[:12]
    return cache_dir / f"emb-{model_tag}-{spec_hash}.bin"


def _embed_sample(path: Path, manifest: DatasetManifest, store: WeightStore) -> np.ndarray:
    img = decode_image(path.read_bytes(), source=str(path))
    return forward_cls(preprocess(img, manifest.preprocess), store)


def extract_embeddings(
    manifest: DatasetManifest,
    store: WeightStore,
    cache_dir: str | Path,
    jobs: int = 1,
) -> EmbeddingSet:
    """Embed every manifest sample exactly once, reusing the cache.

    Unreadable samples are collected and skipped; more than 10% failures
    aborts the run. The cache file is rewritten only when its content
    changed, and equal content always produces equal bytes.
    """
    model_tag = store.config.tag
    if not manifest.entries:
        return EmbeddingSet(
            model_tag=model_tag,
            class_names=manifest.class_names,
            ids=(),
            vectors=np.zeros((0, store.config.embed_dim), dtype=np.float32),
            label_idx=np.zeros(0, dtype=np.int64),
        )

    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    cache_file = _cache_path(cache_dir, model_tag, manifest.preprocess.key())
    cached: dict[str, np.ndarray] = {}
    if cache_file.exists():
        cached = read_tensors(cache_file)

    failures: dict[str, str] = {}
    keys: dict[str, str] = {}
    for entry in manifest.entries:
        try:
            keys[entry.sample_id] = f"{entry.sample_id}@{_content_hash(entry.path)}"
        except DataError as exc:
            failures[entry.sample_id] = str(exc)

    todo = [
        e for e in manifest.entries
        if e.sample_id in keys and keys[e.sample_id] not in cached
    ]

    def work(entry):
        return entry.sample_id, _embed_sample(entry.path, manifest, store)

    fresh: dict[str, np.ndarray] = {}
    if todo:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(_guarded(work, failures), todo)
                for item in results:
                    if item is not None:
                        fresh[item[0]] = item[1]
        else:
            for entry in todo:
                item = _guarded(work, failures)(entry)
                if item is not None:
                    fresh[item[0]] = item[1]

    if failures:
        for sid, msg in sorted(failures.items()):
            log.warning("skipping sample %s: %s", sid, msg)
        if len(failures) > 0.10 * len(manifest.entries):
            raise DataError(
                f"{len(failures)} of {len(manifest.entries)} samples failed to embed: "
                + "; ".join(f"{k}: {v}" for k, v in sorted(failures.items()))
            )

    live: dict[str, np.ndarray] = {}
    for entry in manifest.entries:
        sid = entry.sample_id
        if sid in failures:
            continue
        key = keys[sid]
        vec = fresh.get(sid)
        if vec is None:
            vec = cached[key]
        live[key] = np.asarray(vec, dtype=np.float32)

    # entries for samples outside this manifest stay (shared caches across
    # subsets); entries whose content hash went stale are dropped
    manifest_ids = {e.sample_id for e in manifest.entries}
    kept_foreign = {
        name: arr for name, arr in cached.items()
        if name not in live and name.rsplit("@", 1)[0] not in manifest_ids
    }
    merged = {**kept_foreign, **live}
    if fresh or set(merged) != set(cached):
        write_tensors(cache_file, merged)

    lut = manifest.class_to_index
    ids = [e.sample_id for e in manifest.entries if e.sample_id not in failures]
    vectors = np.stack([live[keys[sid]] for sid in ids]) if ids else np.zeros(
        (0, store.config.embed_dim), dtype=np.float32
    )
    label_by_id = {e.sample_id: lut[e.label] for e in manifest.entries}
    return EmbeddingSet(
        model_tag=model_tag,
        class_names=manifest.class_names,
        ids=tuple(ids),
        vectors=vectors.astype(np.float32),
        label_idx=np.array([label_by_id[s] for s in ids], dtype=np.int64),
    )


def _guarded(fn, failures: dict[str, str]):
    def wrapper(entry):
        try:
            return fn(entry)
        except DataError as exc:
            failures[entry.sample_id] = str(exc)
            return None

    return wrapper


def save_embeddings_csv(embeddings: EmbeddingSet, path: str | Path) -> None:
    """Header sample_id,label,e0..e{D-1}; '.' decimals, LF endings.

    Values are written with shortest round-trip precision, so an
    export/import cycle reproduces the float32 matrix exactly.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "label"] + [f"e{i}" for i in range(embeddings.dim)])
        for sid, label, vec in zip(embeddings.ids, embeddings.labels(), embeddings.vectors):
            writer.writerow([sid, label] + [repr(float(v)) for v in vec])


def import_embeddings(
    path: str | Path,
    manifest: DatasetManifest,
    model_tag: str | None = None,
) -> EmbeddingSet:
    """Read an embedding CSV and validate it against the manifest.

    Unknown ids, label mismatches, ragged rows, and non-finite values are
    errors naming the offending row.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read embeddings {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty embedding file")
    header = rows[0]
    if header[:2] != ["sample_id", "label"] or len(header) < 3:
        raise DataError(f"{path}: expected header sample_id,label,e0,...")
    dim = len(header) - 2
    if header[2:] != [f"e{i}" for i in range(dim)]:
        raise DataError(f"{path}: embedding columns must be e0..e{dim - 1}")

    label_by_id = {e.sample_id: e.label for e in manifest.entries}
    lut = manifest.class_to_index
    ids: list[str] = []
    labels: list[int] = []
    vectors = np.zeros((len(rows) - 1, dim), dtype=np.float32)
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != dim + 2:
            raise DataError(f"{path}:{lineno}: expected {dim + 2} fields, got {len(row)}")
        sid, label = row[0], row[1]
        if sid in ids:
            raise DataError(f"{path}:{lineno}: duplicate sample_id {sid!r}")
        if sid not in label_by_id:
            raise DataError(f"{path}:{lineno}: unknown sample_id {sid!r}")
        if label != label_by_id[sid]:
            raise DataError(
                f"{path}:{lineno}: label {label!r} disagrees with manifest "
                f"({label_by_id[sid]!r}) for {sid}"
            )
        try:
            vec = np.array([float(v) for v in row[2:]], dtype=np.float32)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad float: {exc}") from exc
        if not np.isfinite(vec).all():
            raise DataError(f"{path}:{lineno}: non-finite embedding value")
        vectors[len(ids)] = vec
        ids.append(sid)
        labels.append(lut[label])

    return EmbeddingSet(
        model_tag=model_tag or path.stem,
        class_names=manifest.class_names,
        ids=tuple(ids),
        vectors=vectors,
        label_idx=np.array(labels, dtype=np.int64),
    )
