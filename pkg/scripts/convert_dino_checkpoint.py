#!/usr/bin/env python3
"""Convert a published DINO ViT checkpoint (.pth) into the weight container.

The published backbones use the same state-dict names this package
expects (patch_embed.proj.*, blocks.N.*, cls_token, pos_embed, norm.*), so
conversion is: load, strip any "module."/"backbone." prefixes, drop
projection-head tensors, write the container. Typical sources:

    dino_deitsmall16_pretrain.pth  -> --variant vit-s16
    dino_deitsmall8_pretrain.pth   -> --variant vit-s8
    dino_vitbase16_pretrain.pth    -> --variant vit-b16
    dino_vitbase8_pretrain.pth     -> --variant vit-b8

Requires torch. Usage:

    python scripts/convert_dino_checkpoint.py checkpoint.pth out.weights --variant vit-s16
"""

import argparse
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from fruitgrade.container import write_tensors  # noqa: E402
from fruitgrade.vit import expected_tensor_shapes, get_config, load_weights  # noqa: E402


def flatten_state_dict(obj) -> dict:
    # checkpoints may nest the backbone under common wrapper keys
    for key in ("teacher", "student", "model", "state_dict"):
        if isinstance(obj, dict) and key in obj and isinstance(obj[key], dict):
            return flatten_state_dict(obj[key])
    return obj


def normalize_name(name: str) -> str:
    for prefix in ("module.", "backbone."):
        while name.startswith(prefix):
            name = name[len(prefix):]
    return name


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("checkpoint", type=Path)
    parser.add_argument("out", type=Path)
    parser.add_argument("--variant", required=True,
                        choices=["vit-s16", "vit-s8", "vit-b16", "vit-b8"])
    args = parser.parse_args()

    import torch

    cfg = get_config(args.variant)
    expected = expected_tensor_shapes(cfg)
    raw = flatten_state_dict(torch.load(args.checkpoint, map_location="cpu",
                                        weights_only=True))
    tensors = {}
    dropped = []
    for name, value in raw.items():
        name = normalize_name(name)
        if name in expected:
            tensors[name] = np.asarray(value.float().numpy(), dtype=np.float32)
        else:
            dropped.append(name)
    missing = sorted(set(expected) - set(tensors))
    if missing:
        print(f"error: checkpoint lacks {len(missing)} tensors, e.g. {missing[:4]}",
              file=sys.stderr)
        return 1
    if dropped:
        print(f"dropping {len(dropped)} non-backbone tensors "
              f"(e.g. {sorted(dropped)[:3]})")
    write_tensors(args.out, tensors)
    load_weights(args.out, cfg)  # validation pass
    print(f"wrote {len(tensors)} tensors to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
