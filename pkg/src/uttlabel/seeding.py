"""Deterministic seed derivation shared by every stochastic component.

Two primitives live here:

* ``stable_seed`` — a keyed hash turning (master seed, unit name) into a
  64-bit seed.  Experiment orchestration derives every training/split seed
  through it, so parallel and serial execution see identical randomness.
* ``SplitMix64`` — the tiny counter-based generator used inside the tree and
  SGD kernels.  The compiled kernel reimplements the same recurrence in C;
  the two must never diverge.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def stable_seed(master: int, name: str) -> int:
    """Derive a 64-bit seed from a master seed and a unit name.

    Stable across processes and platforms (unlike ``hash()``).
    """
    key = (master & _MASK64).to_bytes(8, "little")
    digest = hashlib.blake2b(name.encode("utf-8"), key=key, digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def mix64(value: int) -> int:
    """SplitMix64 output function: scramble a 64-bit value."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def tree_seed(forest_seed: int, tree_index: int) -> int:
    """Per-tree stream seed: independent trees from one forest seed."""
    return mix64((forest_seed + _SPLITMIX_GAMMA * (tree_index + 1)) & _MASK64)


class SplitMix64:
    """Minimal deterministic PRNG with an exactly specified integer stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _SPLITMIX_GAMMA) & _MASK64
        return mix64(self.state)

    def next_below(self, bound: int) -> int:
        """Uniform-ish integer in [0, bound).

        Plain modulo; the bias at 64 bits is irrelevant here and keeping the
        reduction trivial keeps the C implementation identical.
        """
        return self.next_u64() % bound

    def shuffle(self, values) -> None:
        """In-place Fisher-Yates over an indexable sequence."""
        for i in range(len(values) - 1, 0, -1):
            j = self.next_below(i + 1)
            values[i], values[j] = values[j], values[i]
