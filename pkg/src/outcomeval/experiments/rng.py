"""SplitMix64 stream with keyed derivation, used for removal simulations.

Python's ``random`` is avoided on purpose: the draws must be reproducible
from the algorithm description alone, in any language.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

T = TypeVar("T")


def mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def derive_seed(base_seed: int, review_id: str, seed_index: int) -> int:
    """Seed for the (base seed, review, replicate) stream."""
    state = mix64(((base_seed + GOLDEN_GAMMA) & MASK64) ^ fnv1a64(review_id))
    return mix64(((state + GOLDEN_GAMMA) & MASK64) ^ (seed_index & MASK64))


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound), rejection sampled to avoid modulo bias."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) - bound) % bound
        while True:
            x = self.next_u64()
            if x >= threshold:
                return x % bound

    def sample_prefix(self, items: Sequence[T], k: int) -> list[T]:
        """First ``k`` positions of a Fisher-Yates shuffle of ``items``.

        Prefixes are nested: the sample for k is the start of the sample for k+1.
        """
        pool = list(items)
        k = min(k, len(pool))
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
