"""Seeded, splittable random source for simulations.

A NoiseStream is identified by (seed, stream_id). Equal identifiers give
bit-identical draw sequences; distinct stream ids give statistically
independent sequences (numpy SeedSequence guarantees). Replicates of an
experiment each get their own stream id, so they can run concurrently and
still be reproduced individually.
"""

from __future__ import annotations

import numpy as np


class NoiseStream:
    """Gaussian/exponential/uniform source backed by a PCG64 generator."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._rng = np.random.default_rng((self.seed, self.stream_id))
        self.position = 0  # number of draw calls, for debugging/repr

    def __repr__(self):
        return f"NoiseStream(seed={self.seed}, stream_id={self.stream_id}, position={self.position})"

    def spawn(self, k: int) -> "NoiseStream":
        """Derived independent stream; deterministic in (seed, stream_id, k)."""
        return NoiseStream(self.seed, (self.stream_id << 20) + 1 + k)

    # -- draws ---------------------------------------------------------------

    def normals(self, size=None) -> np.ndarray:
        self.position += 1
        return self._rng.standard_normal(size)

    def increments(self, h: float, size=None) -> np.ndarray:
        """Brownian increments for step h: N(0, h) per coordinate."""
        self.position += 1
        return np.sqrt(h) * self._rng.standard_normal(size)

    def exponential(self, scale: float) -> float:
        self.position += 1
        return float(self._rng.exponential(scale))

    def uniform(self) -> float:
        self.position += 1
        return float(self._rng.uniform())
