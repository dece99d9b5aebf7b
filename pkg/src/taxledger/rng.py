"""Portable seeded randomness.

Splits, weight init, dropout masks and corpus synthesis must be
bit-reproducible across runs and across reimplementations, so everything
random in this package flows through two fixed 64-bit generators instead
of platform RNGs:

* ``Xoshiro256StarStar`` — sequential xoshiro256**, seeded via splitmix64.
  Used for corpus-level draws (shuffles, sampling, token choices).
* ``CounterStream`` — vectorised splitmix64 over a counter, for bulk
  numpy draws (dropout masks, pixel noise, weight init).

Both are pure integer arithmetic mod 2**64.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_T = TypeVar("_T")

# numpy constants kept as uint64 so array ops wrap without warnings
_NP_GOLDEN = np.uint64(GOLDEN)
_NP_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_NP_MIX2 = np.uint64(0x94D049BB133111EB)
_NP_30 = np.uint64(30)
_NP_27 = np.uint64(27)
_NP_31 = np.uint64(31)
_NP_11 = np.uint64(11)
_TO_UNIT = 2.0 ** -53


def splitmix64(x: int) -> int:
    """One splitmix64 output for state ``x`` (finalizer only, no stepping)."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash; stable across platforms."""
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def derive_seed(master: int, *labels: int | str) -> int:
    """Derive an independent child seed from ``master`` and a label path.

    String labels are hashed with FNV-1a so call sites can name streams
    ("shuffle", "dropout", ...) instead of inventing integer indices.
    """
    s = splitmix64(master & MASK64)
    for label in labels:
        token = fnv1a64(label.encode("utf-8")) if isinstance(label, str) else label & MASK64
        s = splitmix64(s ^ token)
    return s


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """Sequential xoshiro256** generator, state seeded via splitmix64."""

    __slots__ = ("_s",)

    def __init__(self, seed: int):
        state = []
        z = seed & MASK64
        for _ in range(4):
            out = splitmix64(z)
            state.append(out)
            z = (z + GOLDEN) & MASK64
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * _TO_UNIT

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via modulo rejection (unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + self.randbelow(hi - lo + 1)

    def choice(self, seq: Sequence[_T]) -> _T:
        return seq[self.randbelow(len(seq))]

    def sample(self, seq: Sequence[_T], k: int) -> list[_T]:
        """k distinct elements, order randomised (partial Fisher-Yates)."""
        if k > len(seq):
            raise ValueError("sample larger than population")
        pool = list(seq)
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _NP_30)) * _NP_MIX1
    z = (z ^ (z >> _NP_27)) * _NP_MIX2
    return z ^ (z >> _NP_31)


class CounterStream:
    """Vectorised splitmix64 over an advancing counter.

    Stateless apart from the counter position, so bulk draws are cheap
    numpy ops while staying bit-identical to scalar splitmix64 with the
    same scrambled key.
    """

    __slots__ = ("_key", "_pos")

    def __init__(self, key: int):
        self._key = splitmix64(key & MASK64)
        self._pos = 0

    def u64(self, n: int) -> np.ndarray:
        idx = np.arange(self._pos + 1, self._pos + n + 1, dtype=np.uint64)
        self._pos += n
        base = np.uint64(self._key)
        return np.asarray(_mix_array(base + idx * _NP_GOLDEN))

    def uniform(self, shape: int | tuple[int, ...]) -> np.ndarray:
        """Uniform float64 in [0, 1) of the given shape."""
        size = int(np.prod(shape)) if not isinstance(shape, int) else shape
        bits = self.u64(size) >> _NP_11
        out = bits.astype(np.float64) * _TO_UNIT
        return out.reshape(shape)
