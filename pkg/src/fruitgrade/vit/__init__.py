from .config import VARIANTS, ViTConfig, get_config
from .kernels import (
    attention_weights,
    gelu,
    layer_norm,
    scaled_dot_product_attention,
    softmax,
)
from .model import forward_cls, forward_tokens, multi_head_self_attention, patch_embed
from .weights import (
    WeightStore,
    expected_tensor_shapes,
    load_weights,
    save_weights,
    synthetic_weight_store,
)

__all__ = [
    "VARIANTS",
    "ViTConfig",
    "get_config",
    "softmax",
    "layer_norm",
    "gelu",
    "scaled_dot_product_attention",
    "attention_weights",
    "patch_embed",
    "multi_head_self_attention",
    "forward_tokens",
    "forward_cls",
    "WeightStore",
    "expected_tensor_shapes",
    "load_weights",
    "save_weights",
    "synthetic_weight_store",
]
