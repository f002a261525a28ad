"""Vision-transformer architecture hyperparameters and the four variants."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ViTConfig:
    tag: str
    patch_size: int
    embed_dim: int
    num_heads: int
    depth: int = 12
    mlp_ratio: int = 4
    image_side: int = 224
    eps_layernorm: float = 1e-6

    def __post_init__(self):
        if self.embed_dim % self.num_heads != 0:
            raise ValueError("embed_dim must be divisible by num_heads")
        if self.image_side % self.patch_size != 0:
            raise ValueError("image_side must be divisible by patch_size")

    @property
    def grid_side(self) -> int:
        return self.image_side // self.patch_size

    @property
    def patch_count(self) -> int:
        return self.grid_side ** 2

    @property
    def token_count(self) -> int:
        return self.patch_count + 1

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.num_heads

    @property
    def mlp_dim(self) -> int:
        return self.embed_dim * self.mlp_ratio


VARIANTS: dict[str, ViTConfig] = {
    "vit-s16": ViTConfig(tag="vit-s16", patch_size=16, embed_dim=384, num_heads=6),
    "vit-s8": ViTConfig(tag="vit-s8", patch_size=8, embed_dim=384, num_heads=6),
    "vit-b16": ViTConfig(tag="vit-b16", patch_size=16, embed_dim=768, num_heads=12),
    "vit-b8": ViTConfig(tag="vit-b8", patch_size=8, embed_dim=768, num_heads=12),
}


def get_config(tag: str) -> ViTConfig:
    try:
        return VARIANTS[tag]
    except KeyError:
        known = ", ".join(sorted(VARIANTS))
        raise ValueError(f"unknown ViT variant {tag!r} (known: {known})") from None
