"""Seeded 64-bit LCG used wherever reproducibility across runs and
implementations matters (synthetic generation, dataset shuffling)."""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_MUL = 6364136223846793005
_INC = 1442695040888963407


class Lcg:
    """64-bit linear congruential generator, output = top 32 bits of state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u32(self) -> int:
        self._state = (self._state * _MUL + _INC) & _MASK64
        return self._state >> 32

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return self.next_u32() / 2**32

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.next_u32() % (hi - lo + 1)

    def choice(self, items):
        return items[self.randint(0, len(items) - 1)]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]
