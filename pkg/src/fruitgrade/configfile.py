"""Flat key-value experiment configuration.

Grammar: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored, UTF-8, dotted keys. Unknown keys and type mismatches are
rejected with the offending line number. Command-line overrides apply
after the file.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .classifiers.base import DEFAULT_PARAMS, KINDS
from .errors import ConfigError
from .imageprep import MODE_FIT_WIDTH, MODE_RESIZE
from .vit.config import VARIANTS


@dataclass(frozen=True)
class ConfigField:
    key: str
    default: str
    kind: str  # int | float | bool | str | choice | floats | ints | strs
    help: str
    choices: tuple[str, ...] = ()


def _classifier_fields() -> list[ConfigField]:
    fields = []
    for kind in KINDS:
        for name, default in sorted(DEFAULT_PARAMS[kind].items()):
            if isinstance(default, bool):
                tag = "bool"
            elif isinstance(default, int):
                tag = "int"
            elif isinstance(default, float):
                tag = "float"
            else:
                tag = "str"
            fields.append(
                ConfigField(
                    key=f"classifier.{kind}.{name}",
                    default=str(default).lower() if tag == "bool" else str(default),
                    kind=tag,
                    help=f"{kind} hyperparameter {name}",
                )
            )
    return fields


SCHEMA: tuple[ConfigField, ...] = tuple(
    [
        ConfigField("data.root", "", "str", "class-per-subdirectory image tree"),
        ConfigField("data.manifest", "", "str", "manifest CSV produced by 'manifest'"),
        ConfigField("preprocess.target_side", "224", "int", "model input side in pixels"),
        ConfigField("preprocess.mode", MODE_RESIZE, "choice",
                    "geometry recipe", (MODE_RESIZE, MODE_FIT_WIDTH)),
        ConfigField("preprocess.mean", "0.485,0.456,0.406", "floats",
                    "per-channel normalization mean"),
        ConfigField("preprocess.std", "0.229,0.224,0.225", "floats",
                    "per-channel normalization std"),
        ConfigField("model.variant", "vit-s16", "choice",
                    "ViT variant tag", tuple(sorted(VARIANTS))),
        ConfigField("model.weights", "", "str", "weight container path"),
        ConfigField("embeddings.cache_dir", "cache", "str",
                    "embedding cache directory"),
        ConfigField("embeddings.import_file", "", "str",
                    "externally produced embedding CSV"),
        ConfigField("split.train", "0.64", "float", "training split fraction"),
        ConfigField("split.val", "0.16", "float", "validation split fraction"),
        ConfigField("split.test", "0.2", "float", "test split fraction"),
        ConfigField("experiment.repetitions", "5", "int",
                    "seeded repetitions per configuration"),
        ConfigField("experiment.master_seed", "0", "int",
                    "master seed; all other seeds derive from it"),
        ConfigField("experiment.standardize", "false", "bool",
                    "standardize features using training-split statistics"),
        ConfigField("experiment.classifiers", ",".join(KINDS), "strs",
                    "classifier kinds to run"),
        ConfigField("curve.sizes", "", "ints",
                    "ascending training-set sizes for learning curves"),
        ConfigField("train.kind", "logistic", "choice",
                    "classifier kind for the train command", KINDS),
        ConfigField("evaluate.model", "", "str", "trained model blob to evaluate"),
        ConfigField("pca.components", "2", "int", "number of principal components"),
        ConfigField("pca.axis", "0", "int", "score column for the density view"),
        ConfigField("pca.bins", "30", "int", "histogram bins for the density view"),
        ConfigField("output.formats", "csv,markdown", "strs",
                    "report formats to emit"),
    ]
    + _classifier_fields()
)

_BY_KEY = {f.key: f for f in SCHEMA}


def _parse_value(field: ConfigField, raw: str, where: str):
    raw = raw.strip()
    try:
        if field.kind == "int":
            return int(raw)
        if field.kind == "float":
            return float(raw)
        if field.kind == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"expected true/false, got {raw!r}")
        if field.kind == "choice":
            if raw not in field.choices:
                raise ValueError(f"expected one of {', '.join(field.choices)}, got {raw!r}")
            return raw
        if field.kind == "floats":
            return tuple(float(v) for v in raw.split(",") if v.strip() != "")
        if field.kind == "ints":
            return tuple(int(v) for v in raw.split(",") if v.strip() != "")
        if field.kind == "strs":
            return tuple(v.strip() for v in raw.split(",") if v.strip() != "")
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {field.key}: {exc}") from None


class Settings:
    """Effective configuration: defaults, then file, then overrides."""

    def __init__(self, raw: dict[str, str]):
        self.raw = raw  # key -> final string form

    def __getitem__(self, key: str):
        field = _BY_KEY[key]
        return _parse_value(field, self.raw[key], "<effective>")

    def metadata(self) -> dict[str, str]:
        """Every effective value, for run provenance."""
        return {f"config.{k}": v for k, v in sorted(self.raw.items())}


def parse_file(path: str | Path) -> dict[str, tuple[str, int]]:
    """Raw key -> (value, line number) pairs from a config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    pairs: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in pairs:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key}")
        pairs[key] = (value.strip(), lineno)
    return pairs


def load_settings(config_path: str | Path | None,
                  overrides: list[str] | None = None) -> Settings:
    """Merge defaults, optional config file, and key=value overrides."""
    raw = {f.key: f.default for f in SCHEMA}
    if config_path is not None:
        for key, (value, lineno) in parse_file(config_path).items():
            if key not in _BY_KEY:
                raise ConfigError(f"{config_path}:{lineno}: unknown key {key!r}")
            _parse_value(_BY_KEY[key], value, f"{config_path}:{lineno}")
            raw[key] = value
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, _, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _BY_KEY:
            raise ConfigError(f"override: unknown key {key!r}")
        _parse_value(_BY_KEY[key], value, "override")
        raw[key] = value
    settings = Settings(raw)
    _validate_cross_field(settings)
    return settings


def _validate_cross_field(settings: Settings) -> None:
    fractions = (settings["split.train"], settings["split.val"], settings["split.test"])
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(
            f"split fractions must sum to 1, got {fractions[0]} + {fractions[1]} "
            f"+ {fractions[2]} = {sum(fractions)}"
        )
    if settings["experiment.repetitions"] < 1:
        raise ConfigError("experiment.repetitions must be >= 1")
    sizes = settings["curve.sizes"]
    if sizes and list(sizes) != sorted(sizes):
        raise ConfigError("curve.sizes must be ascending")
    for kind in settings["experiment.classifiers"]:
        if kind not in KINDS:
            raise ConfigError(f"unknown classifier kind {kind!r} in experiment.classifiers")
    for fmt in settings["output.formats"]:
        if fmt not in ("csv", "markdown"):
            raise ConfigError(f"unknown report format {fmt!r}")


def schema_help() -> str:
    """One line per config key: 'key (default: X) help'."""
    lines = ["configuration keys (file or --set overrides):"]
    for field in SCHEMA:
        default = field.default if field.default != "" else "<empty>"
        lines.append(f"  {field.key} (default: {default}) {field.help}")
    return "\n".join(lines)
