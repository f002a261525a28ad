"""Labeled sample registries built from class-per-subdirectory trees.

Sample ids are class-prefixed filenames ("green/img_001.jpg") so identical
filenames in different classes stay distinct. Ordering is canonical
(lexicographic by class, then filename): directory read order never leaks
into downstream splits or reports.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .imageprep import PreprocessSpec

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclass(frozen=True)
class ManifestEntry:
    sample_id: str
    path: Path
    label: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    class_names: tuple[str, ...]
    preprocess: PreprocessSpec = field(default_factory=PreprocessSpec)

    def __post_init__(self):
        if len(self.class_names) < 2:
            raise DataError("a dataset needs at least 2 classes")
        ids = [e.sample_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate sample ids in manifest")
        known = set(self.class_names)
        for e in self.entries:
            if e.label not in known:
                raise DataError(f"entry {e.sample_id} has unknown label {e.label!r}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def class_to_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.class_names)}

    def label_indices(self) -> np.ndarray:
        lut = self.class_to_index
        return np.array([lut[e.label] for e in self.entries], dtype=np.int64)

    def ids(self) -> list[str]:
        return [e.sample_id for e in self.entries]


def build_manifest(root: str | Path,
                   preprocess: PreprocessSpec | None = None) -> DatasetManifest:
    """Scan `root`, one subdirectory per class, collecting PNG/JPEG files.

    Empty class directories produce a warning and are dropped; fewer than
    two usable classes is an error.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    class_names = []
    entries = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        files = sorted(
            f for f in class_dir.iterdir()
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES
        )
        if not files:
            log.warning("class directory %s holds no images, skipping", class_dir)
            continue
        class_names.append(class_dir.name)
        for f in files:
            entries.append(
                ManifestEntry(sample_id=f"{class_dir.name}/{f.name}",
                              path=f, label=class_dir.name)
            )
    if not entries:
        raise DataError(f"no usable images under {root}")
    if len(class_names) < 2:
        raise DataError(f"found only {len(class_names)} usable class under {root}")
    return DatasetManifest(
        entries=tuple(entries),
        class_names=tuple(class_names),
        preprocess=preprocess or PreprocessSpec(),
    )


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write the entry table as CSV: sample_id,path,label (LF endings)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "path", "label"])
        for e in manifest.entries:
            writer.writerow([e.sample_id, str(e.path), e.label])


def load_manifest(path: str | Path,
                  preprocess: PreprocessSpec | None = None) -> DatasetManifest:
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    if not rows or rows[0] != ["sample_id", "path", "label"]:
        raise DataError(f"{path}: expected header 'sample_id,path,label'")
    entries = []
    labels_seen = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        sample_id, file_path, label = row
        entries.append(ManifestEntry(sample_id=sample_id, path=Path(file_path), label=label))
        if label not in labels_seen:
            labels_seen.append(label)
    return DatasetManifest(
        entries=tuple(entries),
        class_names=tuple(sorted(labels_seen)),
        preprocess=preprocess or PreprocessSpec(),
    )
