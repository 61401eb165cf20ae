import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from probid.rational import (
    Interval, ceil_log2, floor_log2, fmt_rat, log2_ceil_int, neg_log2_ceil, neg_log2_floor, parse_rat, pow2,
)

pos = st.fractions(min_value=Fraction(1, 10**6), max_value=10**6)


@given(pos)
def test_floor_ceil_log2_bracket(x):
    f, c = floor_log2(x), ceil_log2(x)
    assert pow2(f) <= x < pow2(f + 1)
    assert pow2(c - 1) < x <= pow2(c)


def test_log2_exact_powers():
    for k in range(-40, 41):
        assert floor_log2(pow2(k)) == k == ceil_log2(pow2(k))


def test_neg_log2_of_zero_is_inf():
    assert neg_log2_floor(Fraction(0)) == math.inf
    assert neg_log2_ceil(Fraction(0)) == math.inf
    assert neg_log2_floor(Fraction(3, 4)) == 0
    assert neg_log2_ceil(Fraction(3, 4)) == 1


def test_log2_ceil_int():
    assert [log2_ceil_int(k) for k in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]


@given(st.fractions())
def test_rat_roundtrip(x):
    assert parse_rat(fmt_rat(x)) == x


@pytest.mark.parametrize("bad", ["1/0", "abc", "1.5e", ""])
def test_parse_rat_rejects(bad):
    with pytest.raises((ValueError, ZeroDivisionError)):
        parse_rat(bad)


def test_interval():
    iv = Interval(Fraction(1, 4), Fraction(1, 2))
    assert iv.width == Fraction(1, 4)
    assert Fraction(1, 3) in iv and Fraction(0) not in iv
    assert iv.overlaps(Interval(Fraction(1, 2), Fraction(1)))
