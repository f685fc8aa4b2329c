"""Deterministic 64-bit RNG used by every stochastic component.

The compiled kernel extension embeds a C copy of the same generator, so the
pure and compiled backends produce identical streams bit for bit.  Keep the
two in sync when touching anything here.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO53_INV = 2.0**-53

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class SplitMix64:
    """splitmix64 generator; period 2^64, one multiply-xor pipeline per draw."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        """Uniform double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * _TWO53_INV

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) for n < 2^32 via multiply-shift."""
        return ((self.next_u64() >> 32) * n) >> 32


def derive_seed(root: int, *labels: object) -> int:
    """Derive an independent child seed from a root seed and a label path.

    Hashing the labels keeps per-component streams decoupled: reordering or
    adding components never shifts another component's stream.
    """
    h = _FNV_OFFSET
    for label in labels:
        for byte in str(label).encode("utf-8"):
            h ^= byte
            h = (h * _FNV_PRIME) & MASK64
        h ^= 0x2F  # separator so ("ab","c") != ("a","bc")
        h = (h * _FNV_PRIME) & MASK64
    return SplitMix64((root & MASK64) ^ h).next_u64()
