"""Deterministic, replayable random-number streams.

Every stochastic trajectory owns one ``NoiseStream`` identified by
(base_seed, stream_index).  Distinct indices give statistically
independent sequences; the same pair replays the identical sequence
bit-for-bit, which is what makes ensemble runs reproducible regardless
of how trajectories are scheduled across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = ["NoiseStream", "sample_complex_wiener"]


@dataclass
class NoiseStream:
    """One independent pseudo-random stream.

    The underlying generator is seeded from a SeedSequence with
    ``base_seed`` as entropy and ``stream_index`` as spawn key, the
    numpy-recommended construction for parallel streams.
    """

    base_seed: int
    stream_index: int = 0
    _rng: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(entropy=int(self.base_seed),
                                    spawn_key=(int(self.stream_index),))
        self._rng = np.random.default_rng(ss)

    def normals(self, shape) -> np.ndarray:
        """Standard normal draws; chunked and scalar calls consume the
        stream identically."""
        return self._rng.standard_normal(shape)

    def uniforms(self, shape=None):
        """Uniform draws on [0, 1)."""
        return self._rng.random(shape)


def sample_complex_wiener(dt: float, s: NoiseStream) -> complex:
    """One complex Wiener increment dxi over a step dt.

    Returns (u + iv) sqrt(dt/2) with u, v independent standard normals,
    so M(dxi) = 0, M(dxi^2) = 0, and M(|dxi|^2) = dt.
    """
    if dt <= 0.0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    z = s.normals(2)
    return complex(z[0], z[1]) * math.sqrt(dt / 2.0)
