"""Portable 64-bit pseudorandom stream.

All sampling goes through SplitMix64 so that a run is reproducible from its
seed alone, independently of numpy's generator versions:

    state <- (state + 0x9E3779B97F4A7C15) mod 2**64
    z <- state
    z <- ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z <- ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    output z ^ (z >> 31)

Uniform indices in [0, n) use the multiply-high map ``(z * n) >> 64``
(no rejection; the bias is below n / 2**64). Uniform doubles use the top 53
bits. Standard normals use the Box-Muller transform on consecutive draws,
returning the cosine branch first and the sine branch second.
"""

import math

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK
        self._spare = None

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def index(self, n):
        """Uniform integer in ``[0, n)``."""
        return (self.next_u64() * n) >> 64

    def uniform(self):
        """Uniform double in ``[0, 1)``."""
        return (self.next_u64() >> 11) * 2.0**-53

    def normal(self):
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53  # (0, 1], keeps log finite
        u2 = (self.next_u64() >> 11) * 2.0**-53
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normal_vector(self, size):
        return np.array([self.normal() for _ in range(size)], dtype=float)


def index_stream(seed, n):
    """Infinite generator of uniform indices in ``[0, n)``."""
    rng = SplitMix64(seed)
    while True:
        yield rng.index(n)
