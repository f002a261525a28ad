"""Deterministic random numbers for splits, subsampling, and training.

Everything seeded in this package flows through a counter-based SplitMix64
stream: output k is ``finalize(seed + (k+1) * GOLDEN)``. The stream is
stateless per index, so draws vectorize with plain uint64 arithmetic and a
given (seed, counter) pair yields the same bytes on every platform and
every numpy version.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB


def _finalize_scalar(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _C1) & _MASK
    z = ((z ^ (z >> 27)) * _C2) & _MASK
    return z ^ (z >> 31)


def mix64(*parts: int | str) -> int:
    """Fold ints and strings into one 64-bit seed.

    Used for seed derivation throughout the harness, e.g. the seed of
    repetition r is ``mix64(master_seed, r)``: adding repetitions never
    perturbs earlier ones.
    """
    h = 0x243F6A8885A308D3
    for part in parts:
        if isinstance(part, str):
            data = part.encode("utf-8")
            for i in range(0, len(data), 8):
                chunk = int.from_bytes(data[i : i + 8], "little")
                h = _finalize_scalar((h ^ chunk) + _GOLDEN)
            h = _finalize_scalar((h ^ len(data)) + _GOLDEN)
        else:
            h = _finalize_scalar((h ^ (int(part) & _MASK)) + _GOLDEN)
    return h


def _finalize_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_C1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_C2)
    return z ^ (z >> np.uint64(31))


class Rng:
    """Sequential interface over the counter-based stream."""

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK
        self._counter = 0

    def spawn(self, *key: int | str) -> "Rng":
        """Independent child stream; children with distinct keys never collide."""
        return Rng(mix64(self._seed, *key))

    def raw(self, n: int) -> np.ndarray:
        """Next n raw 64-bit outputs."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            state = np.uint64(self._seed) + idx * np.uint64(_GOLDEN)
            return _finalize_array(state)

    def uniform(self, n: int) -> np.ndarray:
        """n float64 samples in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)) * (2.0 ** -53)

    def normal(self, n: int) -> np.ndarray:
        """n standard-normal float64 samples (Box-Muller)."""
        m = (n + 1) // 2
        u1 = (self.raw(m) >> np.uint64(11)).astype(np.float64)
        u1 = (u1 + 1.0) * (2.0 ** -53)  # (0, 1], keeps log finite
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return out[:n]

    def integers(self, n: int, high: int) -> np.ndarray:
        """n int64 samples uniform on [0, high)."""
        if high <= 0:
            raise ValueError("high must be positive")
        return np.minimum((self.uniform(n) * high).astype(np.int64), high - 1)

    def permutation(self, n: int) -> np.ndarray:
        """A uniform permutation of range(n), via argsort of random keys."""
        return np.argsort(self.uniform(n), kind="stable")

    def weighted_sample_without_replacement(
        self, weights: np.ndarray, n: int
    ) -> np.ndarray:
        """Draw n distinct indices with probability proportional to weight.

        Efraimidis-Spirakis: each item gets key u_i^(1/w_i); the n largest
        keys form the sample. Distributionally identical to successive
        weighted draws without replacement.
        """
        weights = np.asarray(weights, dtype=np.float64)
        if n > weights.size:
            raise ValueError("sample size exceeds population")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        u = (self.raw(weights.size) >> np.uint64(11)).astype(np.float64)
        u = (u + 1.0) * (2.0 ** -53)
        keys = np.log(u) / weights  # monotone transform of u^(1/w)
        order = np.argsort(-keys, kind="stable")
        return np.sort(order[:n])
