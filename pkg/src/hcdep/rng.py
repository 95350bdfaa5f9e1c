"""Deterministic per-replicate random streams.

Every random draw in the package comes from a Philox-4x64 counter-based
generator whose 128-bit key is derived from ``(master_seed, index, domain)``
with the SplitMix64 finalizer:

    h   = fmix(fmix(master_seed ^ domain_tag) ^ index)
    key = (h << 64) | index

The stream for replicate ``index`` therefore depends only on that triple and
never on how many other streams were opened or in what order.

Uniforms are built from the top 53 bits of each raw 64-bit word as
``((w >> 11) + 0.5) * 2**-53``, which lies strictly inside (0, 1); normals are
the standard normal quantile of those uniforms. Both steps are exact
functions of the raw words, so streams are reproducible across platforms.
"""

import numpy as np

from .normal import std_normal_quantile

MASK64 = (1 << 64) - 1

# Domain tags keep streams used for different purposes disjoint.
NOISE = 0
SIGNAL = 0x5167_4E41_4C00_0001
SITE = 0x5349_5445_0000_0002


def fmix64(x: int) -> int:
    """SplitMix64 output finalizer."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def stream_key(master_seed: int, index: int, domain: int = NOISE) -> int:
    if index < 0:
        raise ValueError("stream index must be non-negative")
    h = fmix64(fmix64((master_seed & MASK64) ^ domain) ^ (index & MASK64))
    return (h << 64) | (index & MASK64)


class Stream:
    """A single replicate's random stream."""

    def __init__(self, master_seed: int, index: int, domain: int = NOISE):
        self.master_seed = int(master_seed)
        self.index = int(index)
        self.domain = domain
        self._bits = np.random.Philox(key=stream_key(self.master_seed, self.index, domain))

    def uniforms(self, size) -> np.ndarray:
        raw = self._bits.random_raw(size)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def normals(self, size) -> np.ndarray:
        return std_normal_quantile(self.uniforms(size))

    def integers(self, low: int, high: int, size) -> np.ndarray:
        """Uniform integers in [low, high) by scaling 53-bit uniforms."""
        u = self.uniforms(size)
        return low + np.minimum(np.floor(u * (high - low)).astype(np.int64), high - low - 1)
