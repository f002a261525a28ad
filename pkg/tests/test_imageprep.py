import io

import numpy as np
import pytest
from PIL import Image

from fruitgrade.errors import DataError
from fruitgrade.imageprep import (
    PreprocessSpec,
    decode_image,
    decode_image_file,
    dump_model_input,
    fit_width_pad_height,
    preprocess,
    resize_bilinear,
    to_model_input,
)


def png_bytes(arr: np.ndarray, mode: str = "RGB") -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def bilinear_oracle(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Direct per-pixel evaluation of the half-pixel-center formula, float64."""
    in_h, in_w = img.shape[:2]
    src = img.astype(np.float64)
    out = np.zeros((out_h, out_w) + img.shape[2:], dtype=np.float64)
    for oy in range(out_h):
        sy = min(max((oy + 0.5) * in_h / out_h - 0.5, 0.0), in_h - 1)
        y0, fy = int(np.floor(sy)), sy - int(np.floor(sy))
        y1 = min(y0 + 1, in_h - 1)
        for ox in range(out_w):
            sx = min(max((ox + 0.5) * in_w / out_w - 0.5, 0.0), in_w - 1)
            x0, fx = int(np.floor(sx)), sx - int(np.floor(sx))
            x1 = min(x0 + 1, in_w - 1)
            out[oy, ox] = (
                src[y0, x0] * (1 - fy) * (1 - fx)
                + src[y0, x1] * (1 - fy) * fx
                + src[y1, x0] * fy * (1 - fx)
                + src[y1, x1] * fy * fx
            )
    return out


class TestDecode:
    def test_white_pixel(self):
        img = decode_image(png_bytes(np.full((1, 1, 3), 255, dtype=np.uint8)))
        assert img.shape == (1, 1, 3)
        assert np.array_equal(img, [[[255, 255, 255]]])

    def test_jpeg_size_preserved(self, tmp_path):
        rgb = (np.arange(120 * 120 * 3) % 256).astype(np.uint8).reshape(120, 120, 3)
        buf = io.BytesIO()
        Image.fromarray(rgb).save(buf, format="JPEG")
        path = tmp_path / "apple.jpg"
        path.write_bytes(buf.getvalue())
        img = decode_image_file(path)
        assert img.shape == (120, 120, 3)

    def test_grayscale_replicated(self):
        gray = np.linspace(0, 255, 16, dtype=np.uint8).reshape(4, 4)
        img = decode_image(png_bytes(gray, mode="L"))
        assert img.shape == (4, 4, 3)
        assert np.array_equal(img[:, :, 0], img[:, :, 1])
        assert np.array_equal(img[:, :, 0], img[:, :, 2])

    def test_truncated_stream_raises(self):
        data = png_bytes(np.zeros((8, 8, 3), dtype=np.uint8))
        with pytest.raises(DataError, match="cannot decode"):
            decode_image(data[:20], source="broken.png")

    def test_error_names_source(self):
        with pytest.raises(DataError, match="offending/path.png"):
            decode_image(b"\x00\x01", source="offending/path.png")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            decode_image_file(tmp_path / "absent.png")


class TestResizeBilinear:
    def test_identity_bitwise(self):
        img = (np.arange(5 * 7 * 3) % 251).astype(np.uint8).reshape(5, 7, 3)
        out = resize_bilinear(img, 5, 7)
        assert out.dtype == np.uint8
        assert np.array_equal(out, img)

    def test_identity_float_bitwise(self):
        img = np.random.default_rng(0).random((6, 4, 3)).astype(np.float32) * 255
        assert np.array_equal(resize_bilinear(img, 6, 4), img)

    def test_dataset_scale_upsample_shape(self):
        img = np.zeros((120, 120, 3), dtype=np.uint8)
        assert resize_bilinear(img, 224, 224).shape == (224, 224, 3)

    def test_2x2_against_per_pixel_oracle(self):
        img = np.array([[0, 0], [255, 255]], dtype=np.uint8)
        out = resize_bilinear(img.astype(np.float32), 4, 4)
        expected = bilinear_oracle(img, 4, 4)
        assert np.allclose(out, expected, atol=1e-3)
        # frozen values: rows interpolate the 0 -> 255 step at clipped offsets
        assert np.allclose(out[:, 0], [0.0, 63.75, 191.25, 255.0], atol=1e-3)

    def test_random_instances_against_oracle(self):
        rng = np.random.default_rng(123)
        for _ in range(25):
            h, w = rng.integers(1, 9, size=2)
            oh, ow = rng.integers(1, 13, size=2)
            img = rng.integers(0, 256, size=(h, w, 3)).astype(np.float32)
            got = resize_bilinear(img, int(oh), int(ow))
            want = bilinear_oracle(img, int(oh), int(ow))
            assert np.allclose(got, want, atol=1e-2)

    def test_constant_image_stays_constant(self):
        img = np.full((3, 5, 3), 77, dtype=np.uint8)
        out = resize_bilinear(img, 10, 11)
        assert np.abs(out.astype(int) - 77).max() <= 1

    def test_zero_target_rejected(self):
        with pytest.raises(ValueError):
            resize_bilinear(np.zeros((4, 4, 3), dtype=np.uint8), 0, 4)


class TestFitWidthPadHeight:
    def test_square_input_unchanged(self):
        img = (np.arange(224 * 224 * 3) % 256).astype(np.uint8).reshape(224, 224, 3)
        out = fit_width_pad_height(img, 224)
        assert np.array_equal(out, img)

    def test_landscape_padding_arithmetic(self):
        # 400x600 at target 224: band height round(400*224/600) = 149,
        # 75 zero rows split 37 top / 38 bottom (odd extra at the bottom)
        img = np.full((400, 600, 3), 200, dtype=np.uint8)
        out = fit_width_pad_height(img, 224)
        assert out.shape == (224, 224, 3)
        assert np.all(out[:37] == 0)
        assert np.all(out[37 + 149 :] == 0)
        assert np.all(out[37 : 37 + 149] > 0)

    def test_band_matches_resize(self):
        rng = np.random.default_rng(7)
        img = rng.integers(0, 256, size=(40, 60, 3)).astype(np.float32)
        out = fit_width_pad_height(img, 30)
        band_h = round(40 * 30 / 60)  # 20
        top = (30 - band_h) // 2
        band = out[top : top + band_h]
        assert np.array_equal(band, resize_bilinear(img, band_h, 30))
        outside = np.concatenate([out[:top], out[top + band_h :]])
        assert np.all(outside == 0)

    def test_portrait_pads_width(self):
        img = np.full((60, 40, 3), 90, dtype=np.uint8)
        out = fit_width_pad_height(img, 30)
        band_w = round(40 * 30 / 60)  # 20
        left = (30 - band_w) // 2
        assert out.shape == (30, 30, 3)
        assert np.all(out[:, :left] == 0)
        assert np.all(out[:, left + band_w :] == 0)


class TestToModelInput:
    def test_zero_image_zero_spec(self):
        spec = PreprocessSpec(target_side=4, mean=(0, 0, 0), std=(1, 1, 1))
        out = to_model_input(np.zeros((4, 4, 3), dtype=np.uint8), spec)
        assert out.shape == (3, 4, 4)
        assert np.all(out == 0)

    def test_single_channel_value(self):
        spec = PreprocessSpec(target_side=1)
        img = np.zeros((1, 1, 3), dtype=np.uint8)
        img[0, 0, 0] = 255
        out = to_model_input(img, spec)
        assert out[0, 0, 0] == pytest.approx((1 - 0.485) / 0.229, abs=1e-6)

    def test_mean_image_maps_to_zero(self):
        spec = PreprocessSpec(target_side=2, mean=(0.2, 0.4, 0.6), std=(0.5, 0.5, 0.5))
        img = np.empty((2, 2, 3), dtype=np.float32)
        for c, m in enumerate(spec.mean):
            img[:, :, c] = m * 255.0
        out = to_model_input(img, spec)
        assert np.allclose(out, 0.0, atol=1e-6)

    def test_invertible(self):
        spec = PreprocessSpec(target_side=6)
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(6, 6, 3)).astype(np.uint8)
        out = to_model_input(img, spec)
        mean = np.asarray(spec.mean, dtype=np.float64).reshape(3, 1, 1)
        std = np.asarray(spec.std, dtype=np.float64).reshape(3, 1, 1)
        recovered = np.rint(255.0 * (out.astype(np.float64) * std + mean))
        assert np.array_equal(recovered.astype(np.uint8).transpose(1, 2, 0), img)

    def test_wrong_size_rejected(self):
        spec = PreprocessSpec(target_side=8)
        with pytest.raises(ValueError):
            to_model_input(np.zeros((4, 4, 3), dtype=np.uint8), spec)

    def test_bad_spec_rejected(self):
        with pytest.raises(ValueError):
            PreprocessSpec(target_side=0)
        with pytest.raises(ValueError):
            PreprocessSpec(std=(0.0, 1.0, 1.0))
        with pytest.raises(ValueError):
            PreprocessSpec(mode="nearest")


def test_preprocess_end_to_end_modes():
    rng = np.random.default_rng(11)
    img = rng.integers(0, 256, size=(50, 100, 3)).astype(np.uint8)
    spec_resize = PreprocessSpec(target_side=32)
    spec_pad = PreprocessSpec(target_side=32, mode="fit-width-pad-height")
    a = preprocess(img, spec_resize)
    b = preprocess(img, spec_pad)
    assert a.shape == b.shape == (3, 32, 32)
    # padded variant has rows pinned at the normalized zero-pixel value
    zero_rows = b[:, :8, :]
    expected = (0.0 - np.asarray(spec_pad.mean)) / np.asarray(spec_pad.std)
    assert np.allclose(zero_rows, expected.reshape(3, 1, 1).astype(np.float32), atol=1e-6)


def test_dump_model_input_format(tmp_path):
    tensor = np.arange(2 * 3 * 4, dtype=np.float32).reshape(2, 3, 4)
    path = tmp_path / "debug.bin"
    dump_model_input(path, tensor)
    raw = path.read_bytes()
    assert len(raw) == 2 * (8 + 3 * 4 * 4)
    off = 0
    for c in range(2):
        h = int.from_bytes(raw[off : off + 4], "little")
        w = int.from_bytes(raw[off + 4 : off + 8], "little")
        assert (h, w) == (3, 4)
        block = np.frombuffer(raw[off + 8 : off + 8 + h * w * 4], dtype="<f4")
        assert np.array_equal(block.reshape(3, 4), tensor[c])
        off += 8 + h * w * 4


def test_spec_key_stable():
    a = PreprocessSpec()
    b = PreprocessSpec()
    assert a.key() == b.key()
    assert PreprocessSpec(mode="fit-width-pad-height").key() != a.key()
