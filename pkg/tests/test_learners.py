from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from probid.clopen import ClopenSet, all_strings
from probid.learners import (
    FrequencyLearner, GeometricSchedule, LearnerError, NullLearner, RationalBernoulliLearner, StubbornLearner,
    TableSchedule, check_trace_invariants, make_reference_learner, null_set, parse_learner, parse_schedule,
    prec_set, reached_precision, run_learner, stern_brocot, threshold_wrap,
)
from probid.measures import Bernoulli, PointMass, nu

bits = st.text(alphabet="01", max_size=12)


def test_null_learner_trace():
    tr = run_learner(NullLearner(), "0101", 100)
    assert tr.emitted == () and tr.status == "null-so-far"
    assert not reached_precision(tr, Fraction(1, 2))


def test_first_bit_learner():
    tr = run_learner(parse_learner("first_bit"), "011", 10)
    (ball,) = tr.balls
    assert ball.center == nu(0) and ball.radius == 0
    assert reached_precision(tr, Fraction(1, 10**9))


def test_eventually_zero_learner():
    (ball,) = run_learner(parse_learner("eventually_zero"), "101", 10).balls
    assert ball.center == PointMass("101")


def test_frequency_learner_example():
    tr = run_learner(FrequencyLearner(), "0011", 64)
    assert [b.radius for b in tr.balls] == [Fraction(1, 4)]
    assert tr.balls[0].center == Bernoulli(Fraction(1, 2))
    tr = run_learner(FrequencyLearner(), "00110101", 64)
    assert [b.radius for b in tr.balls] == [Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)]
    assert not reached_precision(tr, Fraction(1, 16))
    assert reached_precision(tr, Fraction(1, 8))


def test_budget_truncates():
    tr = run_learner(FrequencyLearner(), "0" * 12, 2)
    assert len(tr.balls) == 2
    assert run_learner(FrequencyLearner(), "0" * 12, 0).emitted == ()


@settings(max_examples=60, deadline=None)
@given(bits, st.integers(0, 20))
def test_traces_extend_with_budget(sigma, b):
    for spec in ("frequency", "first_bit", "rational_bernoulli"):
        A = parse_learner(spec)
        t1, t2 = run_learner(A, sigma, b), run_learner(A, sigma, b + 3)
        assert t2.emitted[:len(t1.emitted)] == t1.emitted
        assert check_trace_invariants(t2)


def test_stern_brocot_prefix():
    it = stern_brocot()
    got = [next(it) for _ in range(9)]
    assert got == [Fraction(x) for x in ("0", "1", "1/2", "1/3", "2/3", "1/4", "2/5", "3/5", "3/4")]


def test_rational_bernoulli_consistency_test():
    A = RationalBernoulliLearner()
    for ones, m in ((0, 10), (500, 1000), (333, 1000), (7, 8)):
        (ball,) = run_learner(A, "1" * ones + "0" * (m - ones), 1 << 16).balls
        q = ball.center.p
        assert float(abs(Fraction(ones, m) - q)) <= m ** (-1 / 3) + 1e-12
    (ball,) = run_learner(A, "0" * 1000, 100).balls
    assert ball.center == Bernoulli(0)
    (ball,) = run_learner(A, "1" * 1000, 100).balls
    assert ball.center == Bernoulli(1)


def test_rational_bernoulli_first_passing_candidate():
    A = RationalBernoulliLearner()
    sigma = "0110" * 50  # frequency 1/2, m = 200
    (ball,) = run_learner(A, sigma, 100).balls
    err = 200 ** (-1 / 3)
    for q in stern_brocot():
        if abs(0.5 - float(q)) <= err:
            assert ball.center.p == q
            break


def test_prec_and_null_sets():
    f = GeometricSchedule(1, 1)
    assert prec_set(NullLearner(), f, 3, 10) == ClopenSet.empty()
    assert null_set(NullLearner(), 3, 10) == ClopenSet.full()
    stub = StubbornLearner(Bernoulli(Fraction(1, 2)))
    assert prec_set(stub, f, 3, 1) == ClopenSet.full()
    assert null_set(stub, 3, 1) == ClopenSet.empty()
    assert prec_set(FrequencyLearner(), GeometricSchedule(1, 1), 4, 64) == ClopenSet.empty()


def test_prec_set_oracle():
    A, f, n = FrequencyLearner(Fraction(1)), GeometricSchedule(1, 0), 5
    want = [s for s in all_strings(n) if reached_precision(run_learner(A, s, 3), f(n))]
    assert prec_set(A, f, n, 3) == ClopenSet.from_atoms(n, want)


def test_threshold_wrap():
    f = GeometricSchedule(1, 0)
    assert threshold_wrap(NullLearner(), f) == NullLearner()
    stub = StubbornLearner(Bernoulli(Fraction(1, 3)))
    W = threshold_wrap(stub, f)
    for s in ("", "0", "0110"):
        assert run_learner(W, s, 5).balls == run_learner(stub, s, 5).balls
    Wf = threshold_wrap(FrequencyLearner(), f)
    for s in all_strings(4):
        assert run_learner(Wf, s, 1000).emitted == ()
    assert null_set(Wf, 4, 1000) == ClopenSet.full()
    # where the inner learner reaches f, the outputs agree
    g = GeometricSchedule(1, -8)
    s = "0101010101"
    assert run_learner(threshold_wrap(FrequencyLearner(), g), s, 64).balls == run_learner(FrequencyLearner(), s, 64).balls


def test_schedules():
    assert GeometricSchedule(2, 1)(3) == Fraction(1, 128)
    t = TableSchedule(("1/2", "1/4"))
    assert [t(i) for i in range(4)] == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)]
    assert parse_schedule(t.spec()) == t
    with pytest.raises(LearnerError):
        TableSchedule(("1/4", "1/2"))
    with pytest.raises(LearnerError):
        GeometricSchedule(0)


@pytest.mark.parametrize("spec", [
    "null", "first_bit", "eventually_zero", "rational_bernoulli:err=1/3", "frequency:radius=2/1",
    "stubborn:bernoulli:p=1/2", "wrap(f=geom:k=1;c=2,frequency:radius=2/1)",
])
def test_learner_spec_roundtrip(spec):
    assert parse_learner(spec).spec() == spec


def test_reference_learner_factory():
    assert make_reference_learner("first_bit").spec() == "first_bit"
    assert make_reference_learner("stubborn", {"measure": "bernoulli:p=1/4"}).spec() == "stubborn:bernoulli:p=1/4"
    with pytest.raises(LearnerError):
        parse_learner("oracle")
