"""Numerical primitives for the transformer forward pass.

All kernels work in the dtype of their inputs: float32 arrays stay float32
end to end (32-bit accumulation); feeding float64 arrays gives the
high-precision debug path.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

_SQRT2 = 1.4142135623730951


def softmax(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along `axis` (max-subtracted)."""
    shifted = v - np.max(v, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
               eps: float = 1e-6) -> np.ndarray:
    """Normalize the last axis to mean 0 / variance 1, then scale and shift."""
    mean = np.mean(x, axis=-1, keepdims=True)
    centered = x - mean
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    dt = x.dtype if x.dtype in (np.float32, np.float64) else np.float32
    return centered / np.sqrt(var + np.asarray(eps, dtype=dt)) * gamma + beta


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact Gaussian-error GELU, x * Phi(x). Not the tanh approximation."""
    x = np.asarray(x)
    half = np.asarray(0.5, dtype=x.dtype if x.dtype.kind == "f" else np.float64)
    return x * half * (1.0 + erf(x / np.asarray(_SQRT2, dtype=half.dtype)))


def scaled_dot_product_attention(q: np.ndarray, k: np.ndarray,
                                 v: np.ndarray) -> np.ndarray:
    """softmax(Q K^T / sqrt(d_k)) V for one head or a stack of heads.

    Accepts (n, d_k) matrices or (..., n, d_k) stacks; the scale is always
    derived from the trailing dimension.
    """
    d_k = q.shape[-1]
    scale = np.asarray(1.0 / np.sqrt(d_k), dtype=q.dtype)
    scores = np.matmul(q, np.swapaxes(k, -1, -2)) * scale
    return np.matmul(softmax(scores, axis=-1), v)


def attention_weights(q: np.ndarray, k: np.ndarray) -> np.ndarray:
    """The row-stochastic weight matrix of scaled dot-product attention."""
    d_k = q.shape[-1]
    scale = np.asarray(1.0 / np.sqrt(d_k), dtype=q.dtype)
    return softmax(np.matmul(q, np.swapaxes(k, -1, -2)) * scale, axis=-1)
