import itertools
import math
import random
from fractions import Fraction

import pytest

from probid.clopen import ClopenSet, make_clopen
from probid.deficiency import (
    Codebook, KraftViolation, RequestSet, canonical_codes, d_hat, ed_hat, header_bits, header_code, is_prefix_free,
    k_hat, kraft_sum, lemma1_certificate, literal_code, literal_cost, make_codebook, register,
    request_set_for_clopen, run_length_request_set, self_delimiting,
)
from probid.measures import Bernoulli, MeasureBall, PointMass, cylinder_prob

half = Fraction(1, 2)


def neg_log2_floor_oracle(x):
    # largest integer m with 2^-m >= x
    m = 0
    while Fraction(1, 2 ** (m + 1)) >= x:
        m += 1
    while Fraction(2) ** (-m) < x:
        m -= 1
    return m


def ed_oracle(sigma, ball, book):
    terms = []
    for k in range(len(sigma) + 1):
        x = cylinder_prob(ball.center, sigma[:k]) + Fraction(2**k) * ball.radius
        f = math.inf if x == 0 else neg_log2_floor_oracle(x)
        terms.append(f - book.k_hat(sigma[:k]))
    return max(terms)


def test_request_set_examples():
    R = request_set_for_clopen(make_clopen(["0"]), Bernoulli(half), 0, 1)
    assert R.requests == (("0", 0),) and kraft_sum(R) == 1
    R = request_set_for_clopen(ClopenSet.full(), Bernoulli(Fraction(1, 3)), 0, 3)
    assert R.requests == (("", 0),)
    R = request_set_for_clopen(make_clopen(["00", "11"]), Bernoulli(half), Fraction(1, 64), 2)
    assert R.requests == (("00", 2), ("11", 2)) and kraft_sum(R) == half


def test_kraft_sum_examples():
    assert kraft_sum(RequestSet(())) == 0
    assert kraft_sum(RequestSet((("", 0),))) == 1
    assert kraft_sum(RequestSet((("00", 2), ("11", 2)))) == half


def test_self_delimiting_and_headers():
    codes = [self_delimiting(n) for n in range(200)]
    assert is_prefix_free(codes)
    assert [header_bits(i) for i in (1, 2, 3, 4, 7, 8)] == [3, 5, 5, 7, 7, 9]
    assert all(len(header_code(i)) == header_bits(i) for i in range(1, 100))
    with pytest.raises(ValueError):
        header_code(0)


def test_literal_fallback():
    assert k_hat(Codebook(), "") == 8
    assert k_hat(Codebook(), "0" * 64) == 86
    for s in ("", "1", "0110", "1" * 9):
        c = literal_code(s)
        assert len(c) == literal_cost(len(s)) and Codebook().decode(c) == s


def test_canonical_codes():
    ws = [3, 1, 2, 3]
    codes = canonical_codes(ws)
    assert [len(c) for c in codes] == ws and is_prefix_free(codes)
    with pytest.raises(KraftViolation):
        canonical_codes([1, 1, 1])


def test_register_example():
    book = Codebook()
    assert k_hat(register(book, RequestSet(())), "0") == k_hat(book, "0")
    R = request_set_for_clopen(make_clopen(["0"]), Bernoulli(half), 0, 1)
    b1 = register(book, R, "example")
    assert k_hat(b1, "0") <= 0 + 3
    assert book.registrations == []  # functional form leaves the argument alone
    b2 = register(b1, RequestSet((("00", 2), ("11", 2))))
    assert b2.registrations[0].header != b2.registrations[1].header
    assert is_prefix_free(b2.emitted_codes() + [literal_code("0101")])
    assert b2.decode(b2.registrations[1].header + b2.registrations[1].codes[0]) == "00"
    assert b2.kraft_bound() <= 1


def test_runlength_book():
    book = make_codebook("runlength")
    assert k_hat(book, "0" * 64) <= 2 * 7 + 1 + 3
    assert k_hat(book, "0" * 64) == 18
    assert d_hat("1" * 20, Bernoulli(half), book) >= 20 - (2 * 5 + 1 + 3)
    R = run_length_request_set(64)
    assert kraft_sum(R) < 1 and ("0" * 64, 15) in R.requests


def test_ed_hat_examples():
    lit, rl = Codebook(), make_codebook("runlength")
    B = MeasureBall(Bernoulli(half), 0, closed=True)
    assert ed_hat("", MeasureBall(Bernoulli(half), Fraction(1, 8)), lit) <= -8
    assert ed_hat("0" * 16, B, lit) < 0
    assert ed_hat("0" * 16, B, rl) >= 16 - (2 * 5 + 1 + 3)
    assert ed_hat("10", MeasureBall(PointMass("1"), 0, closed=True), lit) < 0
    assert d_hat("1", PointMass("1"), lit) <= 0


def test_ed_hat_matches_oracle():
    rng = random.Random(3)
    book = make_codebook("runlength")
    book.register_inplace(RequestSet((("0110", 1), ("1", 2))))
    for _ in range(60):
        sigma = "".join(rng.choice("01") for _ in range(rng.randrange(10)))
        ball = MeasureBall(Bernoulli(Fraction(rng.randrange(9), 8)), Fraction(rng.randrange(3), 64))
        assert ed_hat(sigma, ball, book) == ed_oracle(sigma, ball, book)


def test_certificate_examples():
    book = Codebook()
    cert = lemma1_certificate(ClopenSet.full(), MeasureBall(Bernoulli(half), 0, closed=True), 0, book)
    assert cert.m == 0 and cert.bound <= 0 - cert.header_bits
    cert = lemma1_certificate(make_clopen(["1"]), MeasureBall(Bernoulli(Fraction(1, 256)), 0, closed=True), 1,
                              book)
    assert cert.m == 8 and cert.registration == 2
    assert ed_hat("1", cert.ball, book) >= 8 - cert.header_bits
    assert cert.bound == 8 - 5 - cert.rounding_loss


def test_certificate_null_measure():
    # mu(C) = 0 and r = 0: m is infinite, no registration is needed
    book = Codebook()
    cert = lemma1_certificate(make_clopen(["1"]), MeasureBall(Bernoulli(0), 0, closed=True), 1, book)
    assert cert.m == math.inf and cert.bound == math.inf and book.registrations == []


def test_certificate_bound_on_every_atom_small_exhaustive():
    # every clopen set of granularity 2 against a few balls
    for pick in itertools.product((0, 1), repeat=4):
        atoms = [s for s, k in zip(("00", "01", "10", "11"), pick) if k]
        if not atoms:
            continue
        C = ClopenSet.from_atoms(2, atoms)
        for p, r in ((half, 0), (Fraction(1, 3), Fraction(1, 256)), (Fraction(1, 8), 0)):
            book = make_codebook("runlength")
            cert = lemma1_certificate(C, MeasureBall(Bernoulli(p), r, closed=True), 3, book)
            assert kraft_sum(cert.requests) <= 1
            for s in C.atoms_at(3):
                assert ed_hat(s, cert.ball, book) >= cert.bound
