"""Forward pass: preprocessed image in, CLS embedding out.

Pre-norm encoder blocks:

    x  = patches -> prepend CLS -> + positional embedding
    x += MHSA(LN1(x))           (per block)
    x += fc2(gelu(fc1(LN2(x))))
    return LN(x)[0]

No dropout, no stochastic depth: inference only.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError
from .config import ViTConfig
from .kernels import gelu, layer_norm, scaled_dot_product_attention
from .weights import WeightStore


def patch_embed(img: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Split (C, S, S) into non-overlapping p x p patches and project.

    Equivalent to a stride-p convolution with `kernel` (D, C, p, p): each
    patch is flattened in (channel, row, col) order and multiplied by the
    flattened kernel. Returns (num_patches, D), patches in row-major grid
    order.
    """
    c, h, w = img.shape
    d, kc, p, p2 = kernel.shape
    if kc != c or p != p2:
        raise ValueError(f"kernel shape {kernel.shape} does not match image channels {c}")
    if h % p != 0 or w % p != 0:
        raise ValueError(f"image side ({h}, {w}) not divisible by patch size {p}")
    gh, gw = h // p, w // p
    patches = (
        img.reshape(c, gh, p, gw, p)
        .transpose(1, 3, 0, 2, 4)  # (gh, gw, c, p, p)
        .reshape(gh * gw, c * p * p)
    )
    return patches @ kernel.reshape(d, c * p * p).T + bias


def multi_head_self_attention(
    x: np.ndarray,
    qkv_weight: np.ndarray,
    qkv_bias: np.ndarray,
    proj_weight: np.ndarray,
    proj_bias: np.ndarray,
    num_heads: int,
) -> np.ndarray:
    """Fused-QKV multi-head attention over a token sequence (n, d).

    The fused projection output is ordered [Q; K; V]; within each of the
    three, heads own contiguous d/num_heads slices.
    """
    n, d = x.shape
    if d % num_heads != 0:
        raise ValueError("token dim not divisible by head count")
    dk = d // num_heads
    qkv = x @ qkv_weight.T + qkv_bias  # (n, 3d)
    q, k, v = qkv[:, :d], qkv[:, d : 2 * d], qkv[:, 2 * d :]
    # (heads, n, dk) stacks
    q = q.reshape(n, num_heads, dk).transpose(1, 0, 2)
    k = k.reshape(n, num_heads, dk).transpose(1, 0, 2)
    v = v.reshape(n, num_heads, dk).transpose(1, 0, 2)
    heads = scaled_dot_product_attention(q, k, v)  # (heads, n, dk)
    merged = heads.transpose(1, 0, 2).reshape(n, d)
    return merged @ proj_weight.T + proj_bias


def _check_finite(arr: np.ndarray, stage: str) -> None:
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite values after {stage}")


def forward_tokens(img: np.ndarray, store: WeightStore,
                   high_precision: bool = False) -> np.ndarray:
    """Full normalized output sequence (token_count, embed_dim).

    `high_precision` runs the whole pass with 64-bit accumulation, for
    debugging parity gaps; the production path is float32 throughout.
    """
    cfg: ViTConfig = store.config
    dtype = np.float64 if high_precision else np.float32

    def t(name: str) -> np.ndarray:
        return store[name].astype(dtype, copy=False)

    x = img.astype(dtype, copy=False)
    if x.shape != (3, cfg.image_side, cfg.image_side):
        raise ValueError(
            f"expected (3, {cfg.image_side}, {cfg.image_side}) input, got {x.shape}"
        )

    tokens = patch_embed(x, t("patch_embed.proj.weight"), t("patch_embed.proj.bias"))
    tokens = np.concatenate([t("cls_token").reshape(1, -1), tokens], axis=0)
    tokens = tokens + t("pos_embed")[0]
    _check_finite(tokens, "patch embedding")

    eps = cfg.eps_layernorm
    for i in range(cfg.depth):
        p = f"blocks.{i}."
        attended = multi_head_self_attention(
            layer_norm(tokens, t(p + "norm1.weight"), t(p + "norm1.bias"), eps),
            t(p + "attn.qkv.weight"),
            t(p + "attn.qkv.bias"),
            t(p + "attn.proj.weight"),
            t(p + "attn.proj.bias"),
            cfg.num_heads,
        )
        tokens = tokens + attended
        _check_finite(tokens, f"block {i} attention")

        normed = layer_norm(tokens, t(p + "norm2.weight"), t(p + "norm2.bias"), eps)
        hidden = gelu(normed @ t(p + "mlp.fc1.weight").T + t(p + "mlp.fc1.bias"))
        tokens = tokens + (hidden @ t(p + "mlp.fc2.weight").T + t(p + "mlp.fc2.bias"))
        _check_finite(tokens, f"block {i} mlp")

    return layer_norm(tokens, t("norm.weight"), t("norm.bias"), eps)


def forward_cls(img: np.ndarray, store: WeightStore,
                high_precision: bool = False) -> np.ndarray:
    """CLS embedding of one preprocessed image; length = embed_dim."""
    return forward_tokens(img, store, high_precision=high_precision)[0]
