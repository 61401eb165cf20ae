"""Exact rational helpers shared by every module.

All measure values are :class:`fractions.Fraction`; this module adds parsing,
serialization, exact dyadic logarithms and a small interval type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

Rat = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def parse_rat(text) -> Fraction:
    """Parse ``"num/den"`` (or a bare integer) into a reduced Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if not s:
        raise ValueError("empty rational")
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(s))


def fmt_rat(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def floor_log2(q: Fraction) -> int:
    """Exact ``floor(log2(q))`` for ``q > 0``."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("log2 of a non-positive number")
    a, b = q.numerator, q.denominator
    e = a.bit_length() - b.bit_length()
    # 2^e <= q < 2^(e+1) up to one step of correction
    if e >= 0:
        if a < (b << e):
            e -= 1
    else:
        if (a << -e) < b:
            e -= 1
    return e


def ceil_log2(q: Fraction) -> int:
    """Exact ``ceil(log2(q))`` for ``q > 0``."""
    e = floor_log2(q)
    return e if Fraction(q) == pow2(e) else e + 1


def pow2(e: int) -> Fraction:
    return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)


def neg_log2_floor(q: Fraction):
    """``floor(-log2(q))``; ``math.inf`` when ``q == 0``."""
    if q == 0:
        return math.inf
    return -ceil_log2(q)


def neg_log2_ceil(q: Fraction):
    """``ceil(-log2(q))``; ``math.inf`` when ``q == 0``."""
    if q == 0:
        return math.inf
    return -floor_log2(q)


def log2_ceil_int(n: int) -> int:
    """``ceil(log2(n))`` for a positive integer (0 for n == 1)."""
    if n <= 0:
        raise ValueError("n must be positive")
    return (n - 1).bit_length()


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def to_json(self):
        return [fmt_rat(self.lo), fmt_rat(self.hi)]
