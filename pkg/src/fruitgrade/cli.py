"""Command-line entry point wiring the pipeline together.

Every run writes its outputs under ``<out-dir>/<timestamp>-<tag>/``
together with a metadata block of all effective settings and seeds, which
is sufficient to reproduce the run bit for bit. Exit codes are stable:
0 success, 2 configuration, 3 data, 4 numeric, 5 I/O.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import ClassifierSpec, accuracy, load_model, save_model, train
from .configfile import Settings, load_settings, schema_help
from .datasets import DatasetManifest, build_manifest, load_manifest, save_manifest
from .embeddings import (
    EmbeddingSet,
    extract_embeddings,
    import_embeddings,
    save_embeddings_csv,
)
from .errors import ConfigError, DataError, FruitgradeError
from .experiments import (
    ExperimentConfig,
    learning_curve,
    run_repeated,
    stratified_split,
)
from .imageprep import PreprocessSpec, dump_model_input, preprocess, decode_image_file
from .pca import pca_fit, pca_transform
from .report import write_report
from .viz import emit_density_1d, emit_scatter_2d
from .vit import load_weights
from .vit.config import get_config

SUBCOMMANDS = ("manifest", "extract", "import", "train", "evaluate",
               "experiment", "curve", "pca")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fruitgrade",
        description="Frozen ViT embeddings + shallow classifiers for fruit grading, CPU only.",
        epilog=schema_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="config file (key = value lines)")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker pool size")
    common.add_argument("--out-dir", type=Path, default=Path("runs"),
                        help="directory that receives per-run subdirectories")
    common.add_argument("--tag", default=None, help="run directory suffix")
    sub.add_parser("manifest", parents=[common],
                   help="scan an image tree into a manifest CSV")
    extract = sub.add_parser("extract", parents=[common],
                             help="embed every manifest sample with a ViT")
    extract.add_argument("--dump-inputs", action="store_true",
                         help="debug: dump preprocessed tensors into the run dir")
    sub.add_parser("import", parents=[common],
                   help="validate an external embedding CSV against a manifest")
    sub.add_parser("train", parents=[common], help="train one classifier")
    sub.add_parser("evaluate", parents=[common],
                   help="accuracy of a saved model on an embedding set")
    sub.add_parser("experiment", parents=[common],
                   help="repeated-seed experiment over the classifier zoo")
    sub.add_parser("curve", parents=[common],
                   help="learning curve over curve.sizes")
    sub.add_parser("pca", parents=[common],
                   help="PCA scatter and density views of an embedding set")
    return parser


def make_run_dir(base: Path, tag: str) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    candidate = base / f"{stamp}-{tag}"
    counter = 1
    while candidate.exists():
        counter += 1
        candidate = base / f"{stamp}-{tag}-{counter}"
    candidate.mkdir(parents=True)
    return candidate


def write_metadata(run_dir: Path, settings: Settings, extra: dict[str, str]) -> None:
    lines = [f"fruitgrade_version = {__version__}"]
    for key, value in sorted({**settings.metadata(), **extra}.items()):
        lines.append(f"{key} = {value}")
    (run_dir / "run-metadata.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def preprocess_spec(settings: Settings) -> PreprocessSpec:
    mean = settings["preprocess.mean"]
    std = settings["preprocess.std"]
    if len(mean) != 3 or len(std) != 3:
        raise ConfigError("preprocess.mean and preprocess.std need 3 components")
    try:
        return PreprocessSpec(
            target_side=settings["preprocess.target_side"],
            mode=settings["preprocess.mode"],
            mean=mean,
            std=std,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def resolve_manifest(settings: Settings) -> DatasetManifest:
    spec = preprocess_spec(settings)
    manifest_path = settings["data.manifest"]
    root = settings["data.root"]
    if manifest_path:
        return load_manifest(manifest_path, preprocess=spec)
    if root:
        return build_manifest(root, preprocess=spec)
    raise ConfigError("set data.manifest or data.root")


def resolve_embeddings(settings: Settings, jobs: int) -> EmbeddingSet:
    """Embedding source: an import CSV if configured, else ViT extraction."""
    import_file = settings["embeddings.import_file"]
    manifest = resolve_manifest(settings)
    if import_file:
        return import_embeddings(import_file, manifest)
    weights_path = settings["model.weights"]
    if not weights_path:
        raise ConfigError("set model.weights or embeddings.import_file")
    store = load_weights(weights_path, get_config(settings["model.variant"]))
    return extract_embeddings(manifest, store, settings["embeddings.cache_dir"],
                              jobs=jobs)


def classifier_specs(settings: Settings, seed: int) -> tuple[ClassifierSpec, ...]:
    return tuple(
        classifier_specs_one(settings, kind, seed)
        for kind in settings["experiment.classifiers"]
    )


def experiment_config(settings: Settings, sizes=None) -> ExperimentConfig:
    return ExperimentConfig(
        classifiers=classifier_specs(settings, settings["experiment.master_seed"]),
        fractions=(settings["split.train"], settings["split.val"], settings["split.test"]),
        repetitions=settings["experiment.repetitions"],
        subsample_sizes=sizes,
        master_seed=settings["experiment.master_seed"],
        standardize=settings["experiment.standardize"],
    )


def cmd_manifest(args, settings: Settings, run_dir: Path) -> dict[str, str]:
    manifest = resolve_manifest(settings)
    out = run_dir / "manifest.csv"
    save_manifest(manifest, out)
    print(f"manifest: {len(manifest)} samples, {len(manifest.class_names)} classes -> {out}")
    return {"samples": str(len(manifest)), "classes": ",".join(manifest.class_names)}


def cmd_extract(args, settings: Settings, run_dir: Path) -> dict[str, str]:
    embeddings = resolve_embeddings(settings, args.jobs)
    out = run_dir / "embeddings.csv"
    save_embeddings_csv(embeddings, out)
    if getattr(args, "dump_inputs", False):
        dump_dir = run_dir / "inputs"
        dump_dir.mkdir()
        manifest = resolve_manifest(settings)
        spec = manifest.preprocess
        for entry in manifest.entries:
            tensor = preprocess(decode_image_file(entry.path), spec)
            name = entry.sample_id.replace("/", "__") + ".bin"
            dump_model_input(dump_dir / name, tensor)
    print(f"extract: {len(embeddings)} embeddings of dim {embeddings.dim} -> {out}")
    return {"embeddings": str(len(embeddings)), "dim": str(embeddings.dim)}


def cmd_import(args, settings: Settings, run_dir: Path) -> dict[str, str]:
    manifest = resolve_manifest(settings)
    import_file = settings["embeddings.import_file"]
    if not import_file:
        raise ConfigError("set embeddings.import_file")
    embeddings = import_embeddings(import_file, manifest)
    out = run_dir / "embeddings.csv"
    save_embeddings_csv(embeddings, out)
    print(f"import: {len(embeddings)} rows of dim {embeddings.dim} validated -> {out}")
    return {"embeddings": str(len(embeddings)), "dim": str(embeddings.dim)}


def cmd_train(args, settings: Settings, run_dir: Path) -> dict[str, str]:
    embeddings = resolve_embeddings(settings, args.jobs)
    seed = settings["experiment.master_seed"]
    spec = classifier_specs_one(settings, settings["train.kind"], seed)
    fractions = (settings["split.train"], settings["split.val"], settings["split.test"])
    tr, va, te = stratified_split(embeddings, fractions, seed=seed)
    X = embeddings.vectors.astype(np.float64)
    y = np.asarray(embeddings.label_idx)
    model = train(spec, X[tr], y[tr], n_classes=len(embeddings.class_names))
    out = run_dir / "model.bin"
    save_model(out, model)
    val_acc = accuracy(model, X[va], y[va]) if len(va) else float("nan")
    print(f"train: {spec.describe()} -> {out} (val accuracy {val_acc:.3f})")
    return {"model": spec.describe(), "val_accuracy": repr(val_acc)}


def classifier_specs_one(settings: Settings, kind: str, seed: int) -> ClassifierSpec:
    params = {}
    for field_key in settings.raw:
        prefix = f"classifier.{kind}."
        if field_key.startswith(prefix):
            params[field_key[len(prefix):]] = settings[field_key]
    return ClassifierSpec(kind, seed=seed, params=params)


def cmd_evaluate(args, settings: Settings, run_dir: Path) -> dict[str, str]:
    model_path = settings["evaluate.model"]
    if not model_path:
        raise ConfigError("set evaluate.model")
    model = load_model(model_path)
    embeddings = resolve_embeddings(settings, args.jobs)
    acc = accuracy(model, embeddings.vectors.astype(np.float64),
                   np.asarray(embeddings.label_idx))
    (run_dir / "evaluation.txt").write_text(f"accuracy = {acc!r}\n", encoding="utf-8")
    print(f"evaluate: accuracy {acc:.4f} over {len(embeddings)} samples")
    return {"accuracy": repr(acc)}


def _emit_reports(report, settings: Settings, run_dir: Path) -> None:
    for fmt in settings["output.formats"]:
        suffix = "csv" if fmt == "csv" else "md"
        write_report(report, run_dir / f"report.{suffix}", fmt)


def cmd_experiment(args, settings: Settings, run_dir: Path) -> dict[str, str]:
    embeddings = resolve_embeddings(settings, args.jobs)
    report = run_repeated(embeddings, experiment_config(settings))
    _emit_reports(report, settings, run_dir)
    best = max(report.aggregate(), key=lambda row: row[2])
    print(f"experiment: {len(report.cells)} runs; best {best[0]} at {best[2]:.3f}")
    return {"cells": str(len(report.cells)), "best_mean": repr(best[2])}


def cmd_curve(args, settings: Settings, run_dir: Path) -> dict[str, str]:
    sizes = settings["curve.sizes"]
    if not sizes:
        raise ConfigError("set curve.sizes for the curve command")
    embeddings = resolve_embeddings(settings, args.jobs)
    report = learning_curve(embeddings, experiment_config(settings, sizes=sizes))
    _emit_reports(report, settings, run_dir)
    print(f"curve: sizes {list(sizes)}, {len(report.cells)} runs")
    return {"cells": str(len(report.cells))}


def cmd_pca(args, settings: Settings, run_dir: Path) -> dict[str, str]:
    embeddings = resolve_embeddings(settings, args.jobs)
    k = settings["pca.components"]
    projection = pca_fit(embeddings.vectors.astype(np.float64), k)
    scores = pca_transform(projection, embeddings.vectors.astype(np.float64))
    labels = embeddings.labels()
    outputs = {}
    if k >= 2:
        svg, csv_path = emit_scatter_2d(embeddings.ids, labels, scores,
                                        run_dir / "pca-scatter")
        outputs["scatter"] = svg.name
    axis = settings["pca.axis"]
    if not 0 <= axis < k:
        raise ConfigError(f"pca.axis {axis} outside [0, {k})")
    svg, _ = emit_density_1d(scores[:, axis], labels, settings["pca.bins"],
                             run_dir / f"pca-density-pc{axis}")
    outputs["density"] = svg.name
    ev = ",".join(repr(float(v)) for v in projection.explained_variance)
    (run_dir / "pca-variance.txt").write_text(f"explained_variance = {ev}\n",
                                              encoding="utf-8")
    print(f"pca: {k} components, views in {run_dir}")
    return {"explained_variance": ev}


COMMANDS = {
    "manifest": cmd_manifest,
    "extract": cmd_extract,
    "import": cmd_import,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "curve": cmd_curve,
    "pca": cmd_pca,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        settings = load_settings(args.config, args.overrides)
        run_dir = make_run_dir(args.out_dir, args.tag or args.command)
        extra = {"command": args.command, "jobs": str(args.jobs)}
        result = COMMANDS[args.command](args, settings, run_dir)
        write_metadata(run_dir, settings, {**extra, **result})
        return 0
    except FruitgradeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
