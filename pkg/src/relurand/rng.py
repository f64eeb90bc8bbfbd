"""Reproducible counter-based random streams.

Every experiment derives per-trial streams from one master seed so that
trial i is reproducible in isolation and trials can run concurrently
without sharing generator state.  Philox is counter-based: the
(master_seed, stream_id) pair is the 128-bit key, so distinct stream ids
give statistically independent sequences.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RngStream"]


class RngStream:
    """A single-owner random stream keyed by (master_seed, stream_id)."""

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        key = np.array(
            [self.master_seed % (1 << 64), self.stream_id % (1 << 64)],
            dtype=np.uint64,
        )
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, stream_id: int) -> "RngStream":
        """Derive an independent stream with the same master seed."""
        return RngStream(self.master_seed, stream_id)

    def normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)

    def uniform(self, size=None) -> np.ndarray:
        return self._gen.random(size)

    def bernoulli(self, p: float, size=None) -> np.ndarray:
        return self._gen.random(size) < p

    def sphere_point(self, dim: int, norm: float = 1.0) -> np.ndarray:
        """Uniform point on the sphere of the given radius."""
        v = self._gen.standard_normal(dim)
        return v * (norm / np.linalg.norm(v))

    def ball_point(self, center: np.ndarray, radius: float) -> np.ndarray:
        """Uniform point in the closed euclidean ball around center."""
        d = center.shape[0]
        u = self.sphere_point(d)
        s = self._gen.random() ** (1.0 / d)
        return center + radius * s * u

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"
