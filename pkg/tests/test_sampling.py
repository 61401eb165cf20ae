from fractions import Fraction

import pytest

from probid.learners import FirstBitLearner, StubbornLearner, parse_learner
from probid.measures import Bernoulli, MuP, PointMass, PointMixture
from probid.sampling import (
    BitSource, bernoulli_bit, derive_seed, empirical_success, sample_sequence, sample_with_transcript,
)


def test_trivial_samples():
    for seed in (0, 1, 99):
        assert sample_sequence(PointMass("1"), 4, seed) == "1000"
        assert sample_sequence(Bernoulli(1), 5, seed) == "11111"
        assert sample_sequence(Bernoulli(0), 5, seed) == "00000"


def test_fair_coin_frequency():
    ones = total = 0
    for t in range(10_000):
        s = sample_sequence(Bernoulli(Fraction(1, 2)), 100, derive_seed(42, t))
        ones += s.count("1")
        total += 100
    assert abs(ones / total - 0.5) <= 0.02


def test_bernoulli_bit_exact_on_dyadic_threshold():
    # with q = 3/8 the decision needs at most 3 uniform bits; enumerate all of them
    hits = 0
    for u in range(8):
        bits = [(u >> (2 - i)) & 1 for i in range(3)]

        class Fixed:
            consumed = 0

            def bit(self, _b=iter(bits)):
                return next(_b)

        hits += bernoulli_bit(Fraction(3, 8), Fixed())
    assert hits == 3


def test_bernoulli_bit_chi_square():
    src = BitSource(7)
    q = Fraction(1, 3)
    n = 30_000
    k = sum(bernoulli_bit(q, src) for _ in range(n))
    mean, var = n / 3, n * 2 / 9
    assert (k - mean) ** 2 / var < 15.0  # chi-square with 1 dof, p < 1e-3


def test_transcript_is_reproducible():
    a = sample_with_transcript(MuP(Fraction(1, 2)), 50, 3)
    b = sample_with_transcript(MuP(Fraction(1, 2)), 50, 3)
    assert a == b and len(a.generator_bits) == 50
    assert a.bits[0] == "1"
    assert a.generator_bits[0] == 0  # the first bit of mu_p is certain
    assert all(g >= 1 for g in sample_with_transcript(Bernoulli(Fraction(1, 3)), 50, 3).generator_bits)
    # a deterministic bit (probability 0 or 1) consumes nothing
    assert sample_with_transcript(PointMass("1"), 3, 0).generator_bits == [0, 0, 0]


def test_derive_seed():
    assert derive_seed(1, 2) == derive_seed(1, 2) != derive_seed(1, 3)
    assert 0 <= derive_seed(2**64 - 1, 5) < 2**64


def test_first_bit_on_mixture():
    res = empirical_success(FirstBitLearner(), PointMixture(Fraction(1, 3)), 40, 1)
    assert res.fraction == 1


def test_rational_bernoulli_small():
    res = empirical_success(parse_learner("rational_bernoulli"), Bernoulli(Fraction(1, 2)), 10, 300)
    assert res.fraction == 1 and res.window == (150, 300)


def test_stubborn_bd_proxy_fails_on_zero_coin():
    res = empirical_success(StubbornLearner(Bernoulli(Fraction(1, 2))), Bernoulli(0), 3, 64, "bd-proxy", N=10)
    assert res.fraction == 0


def test_stubborn_bd_proxy_on_its_own_measure():
    res = empirical_success(StubbornLearner(Bernoulli(Fraction(1, 2))), Bernoulli(Fraction(1, 2)), 5, 64,
                            "bd-proxy", N=10)
    assert res.fraction == 1


def test_bc_proxy_rejects_wrong_measure():
    res = empirical_success(StubbornLearner(Bernoulli(Fraction(1, 2))), Bernoulli(0), 3, 10)
    assert res.fraction == 0


def test_empirical_success_arguments():
    with pytest.raises(ValueError):
        empirical_success(FirstBitLearner(), Bernoulli(0), 0, 1)
    with pytest.raises(ValueError):
        empirical_success(FirstBitLearner(), Bernoulli(0), 1, 1, "ml-test")
