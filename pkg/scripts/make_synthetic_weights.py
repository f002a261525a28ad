#!/usr/bin/env python3
"""Write a deterministic surrogate weight container for offline pipeline runs.

Surrogate weights are untrained: embeddings carry no pretrained semantics,
so classification quality will be far below the converted published
checkpoints. Useful for smoke-testing the CLI end to end without network
access.

    python scripts/make_synthetic_weights.py vit-s16 s16-surrogate.weights --seed 7
"""

import argparse
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from fruitgrade.vit import get_config, save_weights, synthetic_weight_store  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("variant", choices=["vit-s16", "vit-s8", "vit-b16", "vit-b8"])
    parser.add_argument("out", type=Path)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    store = synthetic_weight_store(get_config(args.variant), seed=args.seed)
    save_weights(args.out, store)
    print(f"wrote {len(store.tensors)} tensors to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
