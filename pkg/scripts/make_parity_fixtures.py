#!/usr/bin/env python3
"""Generate the ViT parity fixtures under tests/fixtures/parity/.

Writes six deterministic 224x224 RGB test images and the reference CLS
vectors computed by an INDEPENDENT PyTorch implementation of the same
pre-norm ViT architecture (conv patch embedding, fused QKV attention,
exact GELU, eps-1e-6 LayerNorm). The production numpy forward pass is
never invoked here, so the committed reference vectors cross-check the
whole kernel stack plus the weight container layout.

The weight tensors come from fruitgrade's deterministic surrogate
generator (seed below): with no network access the published DINO
checkpoint cannot be fetched, and untrained surrogate weights exercise
the same arithmetic. To regenerate fixtures against the real checkpoint,
convert it first (scripts/convert_dino_checkpoint.py) and pass
--weights <container>.

Requires torch; run from the repository root:

    python scripts/make_parity_fixtures.py
"""

import argparse
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from fruitgrade.imageprep import PreprocessSpec, decode_image_file, to_model_input  # noqa: E402
from fruitgrade.rng import Rng  # noqa: E402
from fruitgrade.vit import get_config, load_weights, synthetic_weight_store  # noqa: E402

PARITY_SEED = 20240209
FIXTURE_DIR = REPO / "tests" / "fixtures" / "parity"
IMAGE_COUNT = 6


def make_images(out_dir: Path) -> list[Path]:
    from PIL import Image

    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    side = 224
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    for i in range(IMAGE_COUNT):
        rng = Rng(PARITY_SEED).spawn("image", i)
        a, b, c = rng.uniform(3)
        img = np.zeros((side, side, 3), dtype=np.float64)
        img[:, :, 0] = 127 + 120 * np.sin(2 * np.pi * (a * xx / side + b * yy / side))
        img[:, :, 1] = 255 * ((xx // 16 + yy // 16) % 2) * c
        cy, cx = side * (0.3 + 0.4 * a), side * (0.3 + 0.4 * b)
        r2 = (yy - cy) ** 2 + (xx - cx) ** 2
        img[:, :, 2] = 255 * np.exp(-r2 / (2 * (side * 0.2) ** 2))
        img += rng.normal(side * side * 3).reshape(side, side, 3) * 8.0
        arr = np.clip(img, 0, 255).astype(np.uint8)
        path = out_dir / f"img{i:02d}.png"
        Image.fromarray(arr).save(path)
        paths.append(path)
    return paths


def torch_reference_cls(store, image_paths) -> np.ndarray:
    """Forward every image through a from-scratch torch ViT."""
    import torch

    cfg = store.config
    t = {name: torch.from_numpy(np.array(arr)).double()
         for name, arr in store.tensors.items()}

    def layer_norm(x, w, b):
        return torch.nn.functional.layer_norm(
            x, (cfg.embed_dim,), weight=w, bias=b, eps=cfg.eps_layernorm
        )

    refs = []
    spec = PreprocessSpec()
    for path in image_paths:
        img = to_model_input(decode_image_file(path), spec)
        x = torch.from_numpy(img[None]).double()  # (1, 3, S, S)
        patches = torch.nn.functional.conv2d(
            x, t["patch_embed.proj.weight"], t["patch_embed.proj.bias"],
            stride=cfg.patch_size,
        )  # (1, D, g, g)
        tokens = patches.flatten(2).transpose(1, 2)[0]  # (N, D)
        tokens = torch.cat([t["cls_token"].reshape(1, -1), tokens], dim=0)
        tokens = tokens + t["pos_embed"][0]

        heads, dk = cfg.num_heads, cfg.head_dim
        for i in range(cfg.depth):
            p = f"blocks.{i}."
            normed = layer_norm(tokens, t[p + "norm1.weight"], t[p + "norm1.bias"])
            qkv = normed @ t[p + "attn.qkv.weight"].T + t[p + "attn.qkv.bias"]
            n = qkv.shape[0]
            q, k, v = qkv.reshape(n, 3, heads, dk).permute(1, 2, 0, 3)
            att = torch.softmax(q @ k.transpose(-1, -2) / dk**0.5, dim=-1) @ v
            merged = att.permute(1, 0, 2).reshape(n, cfg.embed_dim)
            tokens = tokens + (merged @ t[p + "attn.proj.weight"].T
                               + t[p + "attn.proj.bias"])
            normed = layer_norm(tokens, t[p + "norm2.weight"], t[p + "norm2.bias"])
            h = torch.nn.functional.gelu(
                normed @ t[p + "mlp.fc1.weight"].T + t[p + "mlp.fc1.bias"]
            )  # exact erf GELU by default
            tokens = tokens + (h @ t[p + "mlp.fc2.weight"].T + t[p + "mlp.fc2.bias"])

        tokens = layer_norm(tokens, t["norm.weight"], t["norm.bias"])
        refs.append(tokens[0].numpy())
    return np.stack(refs)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--weights", type=Path, default=None,
                        help="optional converted checkpoint container; "
                             "defaults to the seeded surrogate weights")
    args = parser.parse_args()

    if args.weights:
        store = load_weights(args.weights, get_config("vit-s16"))
        source = str(args.weights)
    else:
        store = synthetic_weight_store(get_config("vit-s16"), seed=PARITY_SEED)
        source = f"surrogate(seed={PARITY_SEED})"

    images = make_images(FIXTURE_DIR)
    refs = torch_reference_cls(store, images)

    out = FIXTURE_DIR / "reference_cls.csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# weights = {source}\n")
        fh.write("# produced by an independent torch forward pass\n")
        for path, vec in zip(images, refs):
            fh.write(path.name + "," + ",".join(repr(float(v)) for v in vec) + "\n")
    print(f"wrote {len(images)} images and {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
