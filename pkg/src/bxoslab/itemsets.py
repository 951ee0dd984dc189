"""Fixed-width item sets and membership-pattern partitions.

An :class:`ItemSet` is a subset of the item universe ``{0, .., m-1}`` stored
as a Python integer bitmask (item ``i`` is bit ``i``).  All set arithmetic is
exact, and cardinality uses word-parallel popcount via ``int.bit_count``, so
intersections stay cheap even at millions of items.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np


class UniverseMismatch(ValueError):
    """Raised when operands live over different item universes."""


def _check_same_universe(a: "ItemSet", b: "ItemSet") -> None:
    if a.m != b.m:
        raise UniverseMismatch(f"universe widths differ: {a.m} != {b.m}")


@dataclass(frozen=True)
class ItemSet:
    """Immutable subset of an ``m``-item universe.

    Items are 0-indexed.  Serialization uses lowercase hex of the
    little-endian byte string, so item 0 is the least significant bit of the
    first byte.
    """

    m: int
    bits: int

    def __post_init__(self) -> None:
        if self.m <= 0:
            raise ValueError(f"universe size must be positive, got {self.m}")
        if self.bits < 0 or self.bits >> self.m:
            raise ValueError("bitmask sets items outside the universe")

    @classmethod
    def empty(cls, m: int) -> "ItemSet":
        return cls(m, 0)

    @classmethod
    def full(cls, m: int) -> "ItemSet":
        return cls(m, (1 << m) - 1)

    @classmethod
    def from_indices(cls, m: int, indices) -> "ItemSet":
        bits = 0
        for i in indices:
            i = int(i)
            if not 0 <= i < m:
                raise ValueError(f"item {i} outside universe of size {m}")
            bits |= 1 << i
        return cls(m, bits)

    @classmethod
    def from_numpy_indices(cls, m: int, indices: np.ndarray) -> "ItemSet":
        """Fast path for index arrays produced by the samplers."""
        if indices.size == 0:
            return cls(m, 0)
        if m <= 512:
            bits = 0
            for i in indices.tolist():
                bits |= 1 << i
            return cls(m, bits)
        buf = np.zeros(m, dtype=bool)
        buf[indices] = True
        raw = np.packbits(buf, bitorder="little").tobytes()
        return cls(m, int.from_bytes(raw, "little"))

    @classmethod
    def from_hex(cls, m: int, text: str) -> "ItemSet":
        raw = bytes.fromhex(text)
        if len(raw) != (m + 7) // 8:
            raise ValueError(f"hex payload is {len(raw)} bytes, expected {(m + 7) // 8}")
        return cls(m, int.from_bytes(raw, "little"))

    def to_hex(self) -> str:
        return self.bits.to_bytes((self.m + 7) // 8, "little").hex()

    def indices(self) -> np.ndarray:
        """Member items as a sorted int64 array."""
        if self.bits == 0:
            return np.empty(0, dtype=np.int64)
        raw = self.bits.to_bytes((self.m + 7) // 8, "little")
        unpacked = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return np.flatnonzero(unpacked[: self.m]).astype(np.int64)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def __contains__(self, item: int) -> bool:
        return 0 <= item < self.m and (self.bits >> item) & 1 == 1

    def __iter__(self) -> Iterator[int]:
        bits = self.bits
        pos = 0
        while bits:
            if bits & 1:
                yield pos
            bits >>= 1
            pos += 1

    def __and__(self, other: "ItemSet") -> "ItemSet":
        _check_same_universe(self, other)
        return ItemSet(self.m, self.bits & other.bits)

    def __or__(self, other: "ItemSet") -> "ItemSet":
        _check_same_universe(self, other)
        return ItemSet(self.m, self.bits | other.bits)

    def __xor__(self, other: "ItemSet") -> "ItemSet":
        _check_same_universe(self, other)
        return ItemSet(self.m, self.bits ^ other.bits)

    def __sub__(self, other: "ItemSet") -> "ItemSet":
        _check_same_universe(self, other)
        return ItemSet(self.m, self.bits & ~other.bits)

    def __invert__(self) -> "ItemSet":
        """Complement within the universe."""
        return ItemSet(self.m, self.bits ^ ((1 << self.m) - 1))

    def intersection_size(self, other: "ItemSet") -> int:
        _check_same_universe(self, other)
        return (self.bits & other.bits).bit_count()

    def union_size(self, other: "ItemSet") -> int:
        _check_same_universe(self, other)
        return (self.bits | other.bits).bit_count()

    def isdisjoint(self, other: "ItemSet") -> bool:
        _check_same_universe(self, other)
        return self.bits & other.bits == 0

    def issubset(self, other: "ItemSet") -> bool:
        _check_same_universe(self, other)
        return self.bits & ~other.bits == 0

    def __repr__(self) -> str:
        if self.m <= 64:
            return f"ItemSet({self.m}, {{{','.join(map(str, self))}}})"
        return f"ItemSet(m={self.m}, |.|={len(self)})"


def part_cells(m: int, sets: Sequence[ItemSet]) -> list[ItemSet]:
    """Partition the universe by membership pattern in ``sets``.

    The ``2**k`` cells come back ordered by pattern, the all-zeros pattern
    first and the first set's indicator most significant: the cell at index
    ``sum(b[i] << (k-1-i))`` holds exactly the items whose membership
    indicator in ``sets[i]`` equals ``b[i]`` for every ``i``.
    """
    full = (1 << m) - 1
    cells = [full]
    for s in sets:
        if s.m != m:
            raise UniverseMismatch(f"set width {s.m} does not match universe {m}")
        nxt = []
        inv = s.bits ^ full
        for c in cells:
            nxt.append(c & inv)
            nxt.append(c & s.bits)
        cells = nxt
    return [ItemSet(m, c) for c in cells]


def part_profile(
    m: int, sets: Sequence[ItemSet], mask: Optional[ItemSet] = None
) -> tuple[int, ...]:
    """Cell cardinalities of the membership-pattern partition.

    With ``mask`` given, each entry counts the cell's items inside the mask
    instead, so the entries sum to ``len(mask)`` rather than ``m``.
    """
    if mask is not None and mask.m != m:
        raise UniverseMismatch(f"mask width {mask.m} does not match universe {m}")
    cells = part_cells(m, sets)
    if mask is None:
        return tuple(len(c) for c in cells)
    return tuple((c.bits & mask.bits).bit_count() for c in cells)
