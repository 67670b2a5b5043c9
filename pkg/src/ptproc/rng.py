"""Deterministic random-stream derivation.

Every stochastic routine in the package draws from a substream addressed by a
master seed plus a path of purpose tags and integer indices, e.g.
``SeedTree(7).child("ais").child(t, i)``.  Streams depend only on their
address, never on scheduling order, so results are bit-identical for any
worker count.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["SeedTree", "as_seed_tree"]


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf8"))
    if isinstance(part, (bool, float)):
        raise TypeError(f"seed path parts must be int or str, got {part!r}")
    part = int(part)
    if part < 0:
        raise ValueError(f"seed path parts must be non-negative, got {part}")
    return part


class SeedTree:
    """Address node in a reproducible stream hierarchy.

    ``child`` extends the address; ``generator`` hashes the full address into
    a fresh ``numpy.random.Generator``.  Two trees with the same address
    always yield identical streams.
    """

    __slots__ = ("keys",)

    def __init__(self, *parts):
        if not parts:
            raise ValueError("SeedTree needs at least a master seed")
        self.keys = tuple(_key(p) for p in parts)

    def child(self, *parts) -> "SeedTree":
        node = SeedTree.__new__(SeedTree)
        node.keys = self.keys + tuple(_key(p) for p in parts)
        return node

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.keys))

    def __repr__(self):
        return f"SeedTree{self.keys!r}"

    def __eq__(self, other):
        return isinstance(other, SeedTree) and self.keys == other.keys

    def __hash__(self):
        return hash(self.keys)


def as_seed_tree(source) -> SeedTree:
    """Normalize an int seed or an existing tree into a SeedTree."""
    if isinstance(source, SeedTree):
        return source
    if isinstance(source, (int, np.integer)):
        return SeedTree(int(source))
    raise TypeError(f"expected int seed or SeedTree, got {type(source).__name__}")
