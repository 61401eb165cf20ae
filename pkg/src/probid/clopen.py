"""Clopen subsets of the Cantor space as canonical atom bitmasks.

A clopen set of granularity ``g`` is stored as an integer whose bit
``int(sigma, 2)`` is set for every length-``g`` atom ``sigma`` in the set
(bit 0 of the empty string when ``g == 0``). Construction always merges full
sibling pairs, so the stored granularity is minimal and equality is plain
field equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator

LAMBDA = "Λ"


class Match(str, Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNDETERMINED = "undetermined"


def check_bits(sigma: str) -> str:
    if not isinstance(sigma, str) or sigma.strip("01"):
        raise ValueError(f"not a bit string: {sigma!r}")
    return sigma


def all_strings(n: int) -> Iterator[str]:
    """Every length-``n`` bit string in lexicographic order."""
    if n == 0:
        yield ""
        return
    for i in range(1 << n):
        yield format(i, f"0{n}b")


@lru_cache(maxsize=None)
def _full(g: int) -> int:
    return (1 << (1 << g)) - 1


@lru_cache(maxsize=None)
def _pattern(period: int, ones: int, width: int) -> int:
    # `ones` low bits set in every block of `period` bits across `width` bits
    return ((1 << ones) - 1) * (((1 << width) - 1) // ((1 << period) - 1))


def _gather_even(x: int, width: int) -> int:
    """Pack the even-position bits of a ``width``-bit mask into ``width/2`` bits."""
    x &= _pattern(2, 1, width)
    s = 1
    while 4 * s <= width:
        x = (x | (x >> s)) & _pattern(4 * s, 2 * s, width)
        s *= 2
    return x


def _double(x: int, width: int) -> int:
    """Inverse of merging: every bit of a ``width``-bit mask becomes two bits."""
    w2 = 2 * width
    s = width // 2
    while s >= 1:
        x = (x | (x << s)) & _pattern(2 * s, s, w2)
        s //= 2
    return x | (x << 1)


def refine_mask(mask: int, g: int, target: int) -> int:
    """Re-express a granularity-``g`` mask at granularity ``target >= g``."""
    if target < g:
        raise ValueError("cannot coarsen by refinement")
    for k in range(g, target):
        mask = _double(mask, 1 << k)
    return mask


def _canonical(g: int, mask: int) -> tuple[int, int]:
    while g > 0:
        width = 1 << g
        even = mask & _pattern(2, 1, width)
        odd = (mask >> 1) & _pattern(2, 1, width)
        if even != odd:
            break
        mask = _gather_even(even, width)
        g -= 1
    return g, mask


@dataclass(frozen=True)
class ClopenSet:
    """Finite union of cylinders in canonical (minimal-granularity) form."""

    granularity: int
    mask: int

    def __post_init__(self):
        g, m = _canonical(self.granularity, self.mask & _full(self.granularity))
        object.__setattr__(self, "granularity", g)
        object.__setattr__(self, "mask", m)

    # construction -----------------------------------------------------

    @classmethod
    def empty(cls) -> "ClopenSet":
        return cls(0, 0)

    @classmethod
    def full(cls) -> "ClopenSet":
        return cls(0, 1)

    @classmethod
    def cylinder(cls, sigma: str) -> "ClopenSet":
        return make_clopen([sigma])

    @classmethod
    def from_atoms(cls, g: int, atoms: Iterable[str]) -> "ClopenSet":
        mask = 0
        for a in atoms:
            if len(check_bits(a)) != g:
                raise ValueError(f"atom {a!r} does not have length {g}")
            mask |= 1 << (int(a, 2) if g else 0)
        return cls(g, mask)

    # queries ----------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    @property
    def is_full(self) -> bool:
        return self.granularity == 0 and self.mask == 1

    def mask_at(self, g: int) -> int:
        return refine_mask(self.mask, self.granularity, g)

    def atom_indices(self) -> Iterator[int]:
        m = self.mask
        while m:
            low = m & -m
            yield low.bit_length() - 1
            m ^= low

    def atoms(self) -> list[str]:
        g = self.granularity
        if g == 0:
            return [""] if self.mask else []
        return [format(i, f"0{g}b") for i in self.atom_indices()]

    def atoms_at(self, g: int) -> list[str]:
        """Atoms after refining to granularity ``g`` (at least the canonical one)."""
        m = self.mask_at(g)
        out = []
        while m:
            low = m & -m
            out.append(format(low.bit_length() - 1, f"0{g}b") if g else "")
            m ^= low
        return out

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def matches(self, sigma: str) -> Match:
        return matches(self, sigma)

    def __contains__(self, sigma: str) -> bool:
        return matches(self, sigma) is Match.INSIDE

    # algebra ----------------------------------------------------------

    def __or__(self, other: "ClopenSet") -> "ClopenSet":
        return boolean("union", self, other)

    def __and__(self, other: "ClopenSet") -> "ClopenSet":
        return boolean("intersect", self, other)

    def __sub__(self, other: "ClopenSet") -> "ClopenSet":
        return boolean("difference", self, other)

    def __invert__(self) -> "ClopenSet":
        return complement(self)

    def issubset(self, other: "ClopenSet") -> bool:
        return (self - other).is_empty

    def isdisjoint(self, other: "ClopenSet") -> bool:
        return (self & other).is_empty

    # serialization ----------------------------------------------------

    def serialize(self) -> str:
        if self.granularity == 0:
            return "g=0;atoms=" + (LAMBDA if self.mask else "")
        return f"g={self.granularity};atoms=" + ",".join(self.atoms())

    @classmethod
    def parse(cls, text: str) -> "ClopenSet":
        head, _, tail = text.strip().partition(";")
        if not head.startswith("g=") or not tail.startswith("atoms="):
            raise ValueError(f"bad clopen serialization: {text!r}")
        g = int(head[2:])
        body = tail[len("atoms="):]
        if not body:
            return cls(g, 0)
        atoms = ["" if a == LAMBDA else a for a in body.split(",")]
        return cls.from_atoms(g, atoms)

    def __str__(self) -> str:
        return self.serialize()


def make_clopen(cylinders: Iterable[str]) -> ClopenSet:
    """The union of the cylinders ``[sigma]``, in canonical form."""
    cyl = [check_bits(_strip_lambda(s)) for s in cylinders]
    if not cyl:
        return ClopenSet.empty()
    g = max(len(s) for s in cyl)
    mask = 0
    for s in cyl:
        span = g - len(s)
        start = (int(s, 2) if s else 0) << span
        mask |= ((1 << (1 << span)) - 1) << start
    return ClopenSet(g, mask)


def _strip_lambda(s: str) -> str:
    return "" if s == LAMBDA else s


def boolean(op: str, a: ClopenSet, b: ClopenSet) -> ClopenSet:
    g = max(a.granularity, b.granularity)
    x, y = a.mask_at(g), b.mask_at(g)
    if op == "union":
        m = x | y
    elif op == "intersect":
        m = x & y
    elif op == "difference":
        m = x & ~y
    else:
        raise ValueError(f"unknown boolean op {op!r}")
    return ClopenSet(g, m)


def complement(a: ClopenSet) -> ClopenSet:
    return ClopenSet(a.granularity, _full(a.granularity) ^ a.mask)


def matches(a: ClopenSet, sigma: str) -> Match:
    g = a.granularity
    n = len(check_bits(sigma))
    if n >= g:
        idx = int(sigma[:g], 2) if g else 0
        return Match.INSIDE if (a.mask >> idx) & 1 else Match.OUTSIDE
    span = g - n
    start = (int(sigma, 2) if sigma else 0) << span
    block = (a.mask >> start) & ((1 << (1 << span)) - 1)
    if block == 0:
        return Match.OUTSIDE
    if block == (1 << (1 << span)) - 1:
        return Match.INSIDE
    return Match.UNDETERMINED


def split_mask(mask: int, g: int) -> tuple[int, int]:
    """Sub-masks (granularity ``g-1``) below the first bit 0 and first bit 1."""
    half = 1 << (g - 1)
    return mask & ((1 << half) - 1), mask >> half


def full_mask(g: int) -> int:
    return _full(g)
