"""Deterministic sampling built on the splitmix64 generator.

splitmix64 (Steele, Lea & Flood 2014; the reference generator shipped in
Java's SplittableRandom) is fixed here by constant so that shuffles and
splits reproduce bit-for-bit across languages and library versions, which
Mersenne Twister wrappers do not guarantee.  Shuffling is Fisher-Yates
with rejection sampling for unbiased bounded draws.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

T = TypeVar("T")

_MASK = (1 << 64) - 1


class SplitMix64:
    """The splitmix64 sequence: x += 0x9E3779B97F4A7C15 per step, then two
    xor-shift-multiply finalization rounds."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_uint64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform draw from [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            draw = self.next_uint64()
            if draw < limit:
                return draw % n


def shuffled(items: Sequence[T], seed: int) -> list[T]:
    """Fisher-Yates shuffle of a copy, driven by SplitMix64(seed)."""
    rng = SplitMix64(seed)
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out
