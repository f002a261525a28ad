"""Image decoding and the two preprocessing recipes.

Square sources (apples, 120x120) are plainly resized to the model side with
bilinear interpolation. Landscape sources (bananas) are scaled so the width
matches the model side and the height is zero-padded top and bottom, which
keeps the original aspect ratio.

Geometry runs in float32 after decode; quantization back to 8 bits happens
only if the caller keeps a uint8 pipeline. Bilinear sampling uses the
half-pixel-center convention: src = (dst + 0.5) * (in_size / out_size) - 0.5,
clamped to the valid range (no corner alignment).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

MODE_RESIZE = "resize-bilinear"
MODE_FIT_WIDTH = "fit-width-pad-height"


@dataclass(frozen=True)
class PreprocessSpec:
    """How raw images become model inputs for one dataset."""

    target_side: int = 224
    mode: str = MODE_RESIZE
    mean: tuple[float, float, float] = IMAGENET_MEAN
    std: tuple[float, float, float] = IMAGENET_STD

    def __post_init__(self):
        if self.target_side <= 0:
            raise ValueError("target_side must be positive")
        if self.mode not in (MODE_RESIZE, MODE_FIT_WIDTH):
            raise ValueError(f"unknown preprocess mode {self.mode!r}")
        if len(self.mean) != 3 or len(self.std) != 3:
            raise ValueError("mean and std must have three components")
        if any(s <= 0 for s in self.std):
            raise ValueError("std components must be positive")

    def key(self) -> str:
        """Stable identity string, used in embedding cache keys."""
        mean = ",".join(repr(float(m)) for m in self.mean)
        std = ",".join(repr(float(s)) for s in self.std)
        return f"side={self.target_side};mode={self.mode};mean={mean};std={std}"


def decode_image(data: bytes, source: str = "<bytes>") -> np.ndarray:
    """Decode PNG/JPEG bytes to an (H, W, 3) uint8 RGB array.

    Grayscale and palette sources are expanded to three channels; alpha is
    dropped. Malformed input raises DataError naming `source`.
    """
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            rgb = img.convert("RGB")
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DataError(f"cannot decode image {source}: {exc}") from exc
    arr = np.asarray(rgb, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataError(f"cannot decode image {source}: unexpected shape {arr.shape}")
    return arr


def decode_image_file(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    return decode_image(data, source=str(path))


def _axis_coords(in_size: int, out_size: int):
    """Half-pixel-center source coordinates for one axis, split into
    (lower index, upper index, upper weight)."""
    coords = (np.arange(out_size, dtype=np.float64) + 0.5) * (in_size / out_size) - 0.5
    coords = np.clip(coords, 0.0, in_size - 1)
    lo = np.floor(coords).astype(np.int64)
    hi = np.minimum(lo + 1, in_size - 1)
    w = (coords - lo).astype(np.float32)
    return lo, hi, w


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize (H, W[, C]) to (out_h, out_w[, C]); dtype is preserved.

    Resizing to the input size is the exact identity. Bilinear blending is
    separable, so rows are interpolated first, then columns.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError("target size must be at least 1x1")
    if img.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or 3-D image, got shape {img.shape}")
    in_h, in_w = img.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return img.copy()

    src = img.astype(np.float32, copy=False)
    y0, y1, wy = _axis_coords(in_h, out_h)
    x0, x1, wx = _axis_coords(in_w, out_w)

    wy = wy.reshape(-1, *([1] * (img.ndim - 1)))
    rows = src[y0] * (1.0 - wy) + src[y1] * wy
    wx = wx.reshape(1, -1, *([1] * (img.ndim - 2)))
    out = rows[:, x0] * (1.0 - wx) + rows[:, x1] * wx

    if img.dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out.astype(img.dtype, copy=False)


def fit_width_pad_height(img: np.ndarray, target: int) -> np.ndarray:
    """Scale to `target` on the long side, zero-pad the short side to square.

    Landscape input: width becomes `target`, the scaled content band is
    centered vertically and the remaining rows are exact zeros; an odd
    remainder puts the extra row at the bottom. Portrait input mirrors the
    rule onto the width (extra column on the right).
    """
    if target < 1:
        raise ValueError("target must be at least 1")
    if img.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or 3-D image, got shape {img.shape}")
    h, w = img.shape[:2]
    if w >= h:
        band_h = max(1, int(round(h * target / w)))
        band = resize_bilinear(img, band_h, target)
        pad = target - band_h
        before, after = pad // 2, pad - pad // 2
        pad_widths = [(before, after), (0, 0)] + [(0, 0)] * (img.ndim - 2)
    else:
        band_w = max(1, int(round(w * target / h)))
        band = resize_bilinear(img, target, band_w)
        pad = target - band_w
        before, after = pad // 2, pad - pad // 2
        pad_widths = [(0, 0), (before, after)] + [(0, 0)] * (img.ndim - 2)
    return np.pad(band, pad_widths, mode="constant")


def to_model_input(img: np.ndarray, spec: PreprocessSpec) -> np.ndarray:
    """Normalize a square RGB image to a channel-major float32 tensor.

    Output value = (pixel / 255 - mean_c) / std_c, shape (3, S, S). Accepts
    uint8 or a float image still on the 0..255 scale.
    """
    side = spec.target_side
    if img.ndim != 3 or img.shape != (side, side, 3):
        raise ValueError(f"expected ({side}, {side}, 3) image, got shape {img.shape}")
    x = img.astype(np.float32, copy=False) / np.float32(255.0)
    mean = np.asarray(spec.mean, dtype=np.float32).reshape(3, 1, 1)
    std = np.asarray(spec.std, dtype=np.float32).reshape(3, 1, 1)
    return (np.transpose(x, (2, 0, 1)) - mean) / std


def preprocess(img: np.ndarray, spec: PreprocessSpec) -> np.ndarray:
    """Full recipe: geometry per spec.mode in float, then normalization."""
    src = img.astype(np.float32, copy=False)
    if spec.mode == MODE_RESIZE:
        square = resize_bilinear(src, spec.target_side, spec.target_side)
    else:
        square = fit_width_pad_height(src, spec.target_side)
    return to_model_input(square, spec)


def dump_model_input(path: str | Path, tensor: np.ndarray) -> None:
    """Debug dump: per channel block, an 8-byte (h, w as two u32 LE) prefix
    followed by the row-major float32 LE payload."""
    if tensor.ndim != 3:
        raise ValueError("expected a channel-major (C, H, W) tensor")
    _, h, w = tensor.shape
    with open(path, "wb") as fh:
        for channel in tensor.astype("<f4", copy=False):
            fh.write(int(h).to_bytes(4, "little"))
            fh.write(int(w).to_bytes(4, "little"))
            fh.write(np.ascontiguousarray(channel).tobytes())
