"""Deterministic 64-bit PRNG (splitmix64) for reproducible benchmark inputs.

The algorithm is fixed repo-wide so that identical seeds produce identical
inputs on any implementation: state advances by the golden-gamma constant
0x9E3779B97F4A7C15 and the output is the standard two-round mix.  Derived
draws are defined on top of the raw stream:

    below(n)     = next_u64() % n
    next_i64()   = next_u64() reinterpreted as two's complement
    next_float() = (next_u64() >> 11) * 2**-53      (in [0, 1))
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


class SplitMix64:
    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_i64(self) -> int:
        u = self.next_u64()
        return u - (1 << 64) if u >= (1 << 63) else u

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        return self.next_u64() % n

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)
