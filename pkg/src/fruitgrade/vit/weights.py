"""Named pre-trained tensors: loading, validation, synthetic generation.

Tensor names follow the checkpoint publisher's state-dict convention
(``blocks.<i>.attn.qkv.weight`` and friends) so converted checkpoints load
without renaming. The fused QKV projection is laid out [Q; K; V] along the
output dimension.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..container import read_tensors, write_tensors
from ..errors import StorageError
from ..rng import Rng
from .config import VARIANTS, ViTConfig

log = logging.getLogger(__name__)


def expected_tensor_shapes(cfg: ViTConfig) -> dict[str, tuple[int, ...]]:
    """Every tensor name a checkpoint must provide, with its shape."""
    d = cfg.embed_dim
    shapes: dict[str, tuple[int, ...]] = {
        "patch_embed.proj.weight": (d, 3, cfg.patch_size, cfg.patch_size),
        "patch_embed.proj.bias": (d,),
        "cls_token": (1, 1, d),
        "pos_embed": (1, cfg.token_count, d),
        "norm.weight": (d,),
        "norm.bias": (d,),
    }
    for i in range(cfg.depth):
        p = f"blocks.{i}."
        shapes[p + "norm1.weight"] = (d,)
        shapes[p + "norm1.bias"] = (d,)
        shapes[p + "attn.qkv.weight"] = (3 * d, d)
        shapes[p + "attn.qkv.bias"] = (3 * d,)
        shapes[p + "attn.proj.weight"] = (d, d)
        shapes[p + "attn.proj.bias"] = (d,)
        shapes[p + "norm2.weight"] = (d,)
        shapes[p + "norm2.bias"] = (d,)
        shapes[p + "mlp.fc1.weight"] = (cfg.mlp_dim, d)
        shapes[p + "mlp.fc1.bias"] = (cfg.mlp_dim,)
        shapes[p + "mlp.fc2.weight"] = (d, cfg.mlp_dim)
        shapes[p + "mlp.fc2.bias"] = (d,)
    return shapes


@dataclass(frozen=True)
class WeightStore:
    """Validated, immutable tensor map for one ViT variant."""

    config: ViTConfig
    tensors: dict[str, np.ndarray]
    skipped: tuple[str, ...] = field(default=())

    def __post_init__(self):
        expected = expected_tensor_shapes(self.config)
        for name, shape in expected.items():
            if name not in self.tensors:
                raise StorageError(f"weight store missing tensor '{name}'")
            arr = self.tensors[name]
            if tuple(arr.shape) != shape:
                raise StorageError(
                    f"tensor '{name}' has shape {tuple(arr.shape)}, expected {shape}"
                )
            if not np.isfinite(arr).all():
                raise StorageError(f"tensor '{name}' contains non-finite values")
        for arr in self.tensors.values():
            arr.setflags(write=False)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


def _infer_config(tensors: dict[str, np.ndarray]) -> ViTConfig:
    """Match pos_embed / patch kernel shapes against the known variants."""
    try:
        pos = tensors["pos_embed"]
        kernel = tensors["patch_embed.proj.weight"]
    except KeyError as exc:
        raise StorageError(f"weight store missing tensor '{exc.args[0]}'") from None
    embed_dim = int(pos.shape[-1])
    patch_size = int(kernel.shape[-1])
    for cfg in VARIANTS.values():
        if cfg.embed_dim == embed_dim and cfg.patch_size == patch_size:
            return cfg
    raise StorageError(
        f"no known ViT variant with embed_dim={embed_dim}, patch_size={patch_size}"
    )


def load_weights(path: str | Path, cfg: ViTConfig | None = None) -> WeightStore:
    """Read a tensor container and validate it against `cfg`.

    With cfg=None the variant is inferred from the stored shapes. Tensor
    names outside the expected set (e.g. a training head) are skipped with
    a warning rather than rejected.
    """
    tensors = read_tensors(path)
    if cfg is None:
        cfg = _infer_config(tensors)
    expected = expected_tensor_shapes(cfg)
    known = {k: v for k, v in tensors.items() if k in expected}
    skipped = tuple(sorted(set(tensors) - set(known)))
    if skipped:
        log.warning("%s: skipping %d unexpected tensors: %s",
                    path, len(skipped), ", ".join(skipped))
    return WeightStore(config=cfg, tensors=known, skipped=skipped)


def save_weights(path: str | Path, store: WeightStore) -> None:
    write_tensors(path, dict(store.tensors))


def synthetic_weight_store(cfg: ViTConfig, seed: int = 0) -> WeightStore:
    """Deterministic surrogate weights with checkpoint-like scales.

    Untrained: embeddings from these weights carry no semantics beyond
    random projection. Useful for exercising the pipeline offline and for
    parity fixtures; real experiments need converted published checkpoints.
    """
    rng = Rng(seed).spawn("vit-weights", cfg.tag)
    out: dict[str, np.ndarray] = {}
    for name, shape in expected_tensor_shapes(cfg).items():
        n = int(np.prod(shape))
        draw = rng.spawn(name)
        if name.endswith("norm.weight") or ".norm1.weight" in name or ".norm2.weight" in name:
            vals = 1.0 + 0.05 * draw.normal(n)
        elif name.endswith(".bias"):
            vals = 0.02 * draw.normal(n)
        else:
            vals = 0.02 * draw.normal(n)
        out[name] = vals.astype(np.float32).reshape(shape)
    return WeightStore(config=cfg, tensors=out)
