"""fruitgrade: CPU-only fruit quality grading with frozen ViT embeddings."""

__version__ = "0.1.0"
