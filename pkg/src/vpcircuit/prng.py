"""Portable seeded random streams.

Every random draw in the package comes from SplitMix64 (Steele, Lea & Flood,
2014) so that datasets and initializations are reproducible bit-for-bit on any
platform and in any language that implements the same recipe:

* state advances by the golden-ratio increment ``0x9E3779B97F4A7C15``;
* output is the Stafford "mix13" finalizer of the new state;
* a uniform double is ``((x >> 11) + 0.5) * 2**-53``, which lies strictly
  inside (0, 1);
* normals use the Box-Muller transform on consecutive uniforms ``(u1, u2)``,
  ``r = sqrt(-2 ln u1)``, emitting ``r cos(2 pi u2)`` then ``r sin(2 pi u2)``.

Streams are keyed by a tuple of non-negative integers (for example
``(seed, class, sample)``), folded in with :func:`derive_key`.
"""

import math

MASK64 = 0xFFFF_FFFF_FFFF_FFFF
GOLDEN_GAMMA = 0x9E37_79B9_7F4A_7C15
_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB) & MASK64
    return z ^ (z >> 31)


def derive_key(*parts: int) -> int:
    """Fold integers into one 64-bit stream key; order matters."""
    key = 0
    for part in parts:
        if part < 0:
            raise ValueError("stream key parts must be non-negative")
        key = mix64((key + GOLDEN_GAMMA + (part & MASK64)) & MASK64)
    return key


class SplitMix64:
    def __init__(self, *key: int):
        self.state = derive_key(*key)

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform double strictly inside (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * _INV_2_53

    def uniforms(self, n: int, low: float = 0.0, high: float = 1.0) -> list:
        span = high - low
        return [low + span * self.uniform() for _ in range(n)]

    def normals(self, n: int) -> list:
        out = []
        while len(out) < n:
            u1 = self.uniform()
            u2 = self.uniform()
            r = math.sqrt(-2.0 * math.log(u1))
            out.append(r * math.cos(_TWO_PI * u2))
            out.append(r * math.sin(_TWO_PI * u2))
        return out[:n]

    def below(self, bound: int) -> int:
        """Unbiased integer in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def shuffle(self, items: list) -> list:
        """Fisher-Yates, returning a new list."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out
