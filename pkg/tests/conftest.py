"""Shared fixtures: tiny and full-size ViTs, a deterministic fruit dataset."""

import numpy as np
import pytest
from PIL import Image

from fruitgrade.embeddings import extract_embeddings
from fruitgrade.imageprep import PreprocessSpec
from fruitgrade.datasets import build_manifest
from fruitgrade.rng import Rng
from fruitgrade.vit import ViTConfig, get_config, save_weights, synthetic_weight_store

TINY_CFG = ViTConfig(tag="tiny", patch_size=8, embed_dim=32, num_heads=4,
                     depth=2, image_side=32)

# hue ramp loosely mimicking ripeness stages: green -> yellow -> brown
CLASS_COLORS = {
    "a-green": (60, 160, 60),
    "b-yellowgreen": (150, 180, 60),
    "c-yellow": (210, 190, 60),
    "d-brown": (130, 90, 40),
}


@pytest.fixture(scope="session")
def tiny_cfg():
    return TINY_CFG


@pytest.fixture(scope="session")
def tiny_store():
    return synthetic_weight_store(TINY_CFG, seed=41)


def make_fruit_image(rng: Rng, color, side=48) -> np.ndarray:
    """A blob of the class color on dark background with speckle noise."""
    img = np.zeros((side, side, 3), dtype=np.float64)
    img += 12.0
    yy, xx = np.mgrid[0:side, 0:side]
    cy = side / 2 + (rng.uniform(1)[0] - 0.5) * side / 4
    cx = side / 2 + (rng.uniform(1)[0] - 0.5) * side / 4
    radius = side * (0.28 + 0.1 * rng.uniform(1)[0])
    mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2
    for c in range(3):
        img[:, :, c][mask] = color[c]
    noise = rng.normal(side * side * 3).reshape(side, side, 3) * 6.0
    return np.clip(img + noise, 0, 255).astype(np.uint8)


def write_fruit_tree(root, per_class=12, side=48, seed=1234):
    rng = Rng(seed)
    for name, color in CLASS_COLORS.items():
        d = root / name
        d.mkdir(parents=True)
        for i in range(per_class):
            img = make_fruit_image(rng.spawn(name, i), color, side=side)
            Image.fromarray(img).save(d / f"img_{i:03d}.png")
    return root


@pytest.fixture(scope="session")
def fruit_root(tmp_path_factory):
    return write_fruit_tree(tmp_path_factory.mktemp("fruit"))


@pytest.fixture(scope="session")
def fruit_manifest(fruit_root):
    return build_manifest(fruit_root, preprocess=PreprocessSpec(target_side=32))


@pytest.fixture(scope="session")
def fruit_manifest_224(fruit_root):
    return build_manifest(fruit_root)  # default 224 preprocessing


@pytest.fixture(scope="session")
def s16_store():
    return synthetic_weight_store(get_config("vit-s16"), seed=9)


@pytest.fixture(scope="session")
def s16_weights_file(tmp_path_factory, s16_store):
    path = tmp_path_factory.mktemp("weights") / "vit-s16.weights"
    save_weights(path, s16_store)
    return path


@pytest.fixture(scope="session")
def warm_cache_dir(tmp_path_factory, fruit_manifest_224, s16_store):
    """Embed the fixture dataset with the full-size surrogate ViT once."""
    cache = tmp_path_factory.mktemp("s16-cache")
    extract_embeddings(fruit_manifest_224, s16_store, cache, jobs=2)
    return cache
