"""Budgeted type-2 learners: ball streams, precision and nullity sets, reference learners."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from .clopen import ClopenSet, all_strings, check_bits
from .measures import Bernoulli, Measure, MeasureBall, PointMass, nu, parse_measure
from .rational import ZERO, fmt_rat, parse_rat, pow2


class LearnerError(ValueError):
    pass


# precision schedules ---------------------------------------------------


class PrecisionSchedule:
    """A nonincreasing positive function ``f : N -> Q`` tending to 0."""

    def __call__(self, n: int) -> Fraction:
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class GeometricSchedule(PrecisionSchedule):
    """``f(n) = 2**-(k*n + c)``."""

    k: int = 1
    c: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise LearnerError("geometric schedule needs k >= 1 to tend to 0")

    def __call__(self, n):
        return pow2(-(self.k * n + self.c))

    def spec(self):
        return f"geom:k={self.k};c={self.c}"


@dataclass(frozen=True)
class TableSchedule(PrecisionSchedule):
    """Explicit values for small ``n``; beyond the table, halve per step."""

    values: tuple

    def __post_init__(self):
        v = tuple(parse_rat(x) for x in self.values)
        if not v or any(x <= 0 for x in v) or any(b > a for a, b in zip(v, v[1:])):
            raise LearnerError("table schedule must be positive and nonincreasing")
        object.__setattr__(self, "values", v)

    def __call__(self, n):
        if n < len(self.values):
            return self.values[n]
        return self.values[-1] * pow2(len(self.values) - 1 - n)

    def spec(self):
        return "table:" + ",".join(fmt_rat(x) for x in self.values)


def parse_schedule(text) -> PrecisionSchedule:
    if isinstance(text, PrecisionSchedule):
        return text
    kind, _, body = text.strip().partition(":")
    if kind == "geom":
        f = dict(p.split("=", 1) for p in body.split(";") if p)
        return GeometricSchedule(int(f.get("k", 1)), int(f.get("c", 0)))
    if kind == "table":
        return TableSchedule(tuple(body.split(",")))
    if kind == "adversary":
        from .adversary import AdversarySchedule

        return AdversarySchedule.parse(body)
    raise LearnerError(f"unknown schedule {text!r}")


# learners --------------------------------------------------------------


class Learner:
    """Deterministic procedure emitting ``(stamp, ball)`` pairs on an input string.

    Stamps are nondecreasing step counts; the output at budget ``b`` is the
    emissions with stamp at most ``b``, so traces extend monotonically.
    """

    def emissions(self, sigma: str) -> Iterator[tuple[int, MeasureBall]]:
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.spec()


@dataclass(frozen=True)
class LearnerTrace:
    input: str
    budget: int
    emitted: tuple  # ((ball, stamp), ...)

    @property
    def status(self) -> str:
        return "emitting" if self.emitted else "null-so-far"

    @property
    def balls(self) -> list[MeasureBall]:
        return [b for b, _ in self.emitted]

    def first_precise(self, eps: Fraction):
        """The first emitted ball of radius strictly below ``eps``, or None."""
        for ball, _ in self.emitted:
            if ball.radius < eps:
                return ball
        return None

    def to_json(self) -> dict:
        return {
            "input": self.input,
            "budget": self.budget,
            "status": self.status,
            "emitted": [{**b.to_json(), "stamp": t} for b, t in self.emitted],
        }


def run_learner(A: Learner, sigma: str, budget: int) -> LearnerTrace:
    check_bits(sigma)
    out = []
    for stamp, ball in A.emissions(sigma):
        if stamp > budget:
            break
        out.append((ball, stamp))
    return LearnerTrace(sigma, budget, tuple(out))


def reached_precision(trace: LearnerTrace, eps) -> bool:
    return trace.first_precise(parse_rat(eps)) is not None


def sweep(A: Learner, n: int, budget: int) -> list[LearnerTrace]:
    """Traces on every length-``n`` string, in lexicographic order."""
    return list(_sweep(A, n, budget))


@lru_cache(maxsize=128)
def _sweep(A: Learner, n: int, budget: int) -> tuple:
    return tuple(run_learner(A, s, budget) for s in all_strings(n))


def prec_set(A: Learner, f: PrecisionSchedule, n: int, budget: int) -> ClopenSet:
    eps = f(n)
    return ClopenSet.from_atoms(n, [t.input for t in _sweep(A, n, budget) if reached_precision(t, eps)])


def null_set(A: Learner, n: int, budget: int) -> ClopenSet:
    return ClopenSet.from_atoms(n, [t.input for t in _sweep(A, n, budget) if not t.emitted])


def check_trace_invariants(trace: LearnerTrace, M: int = 16) -> bool:
    """Radius bound ``2r <= 2**-i`` on the i-th ball (1-indexed) and certified nesting."""
    balls = trace.balls
    for i, b in enumerate(balls, start=1):
        if 2 * b.radius > pow2(-i):
            return False
    for outer, inner in zip(balls, balls[1:]):
        if not outer.contains_ball(inner, M):
            return False
    return True


@dataclass(frozen=True)
class NullLearner(Learner):
    def emissions(self, sigma):
        return iter(())

    def spec(self):
        return "null"


@dataclass(frozen=True)
class FirstBitLearner(Learner):
    """Outputs the Dirac measure on ``i^w`` where ``i`` is the first bit."""

    def emissions(self, sigma):
        if sigma:
            yield 1, MeasureBall(nu(int(sigma[0])), ZERO, closed=True)

    def spec(self):
        return "first_bit"


@dataclass(frozen=True)
class EventuallyZeroLearner(Learner):
    def emissions(self, sigma):
        yield 1, MeasureBall(PointMass(sigma), ZERO, closed=True)

    def spec(self):
        return "eventually_zero"


@dataclass(frozen=True)
class StubbornLearner(Learner):
    measure: Measure

    def emissions(self, sigma):
        yield 1, MeasureBall(self.measure, ZERO, closed=True)

    def spec(self):
        return f"stubborn:{self.measure.spec()}"


def stern_brocot() -> Iterator[Fraction]:
    """0, 1, then the mediants level by level: 1/2, 1/3, 2/3, 1/4, 2/5, 3/5, 3/4, ..."""
    yield Fraction(0)
    yield Fraction(1)
    level = [(0, 1), (1, 1)]
    while True:
        nxt = [level[0]]
        for (a, b), (c, d) in zip(level, level[1:]):
            m = (a + c, b + d)
            yield Fraction(*m)
            nxt += [m, (c, d)]
        level = nxt


@dataclass(frozen=True)
class RationalBernoulliLearner(Learner):
    """Outputs Ber(q) for the first rational ``q`` with ``|freq - q| <= err(m)``.

    ``err(m) = m**-e`` with ``e = err`` (default 1/3); the cube test is done in
    integers so that no rounding enters the selection. Every rational is
    tested at one step of cost.
    """

    err: Fraction = Fraction(1, 3)
    max_candidates: int = 1 << 16

    def __post_init__(self):
        object.__setattr__(self, "err", parse_rat(self.err))
        if not 0 < self.err < 1:
            raise LearnerError("rational_bernoulli err exponent must lie in (0, 1)")

    def _close(self, ones: int, m: int, q: Fraction) -> bool:
        # |ones/m - a/b| <= m^(-e)  <=>  (|ones*b - a*m| / (b*m))^(1/e) <= 1/m
        a, b = q.numerator, q.denominator
        e = self.err
        k, j = e.denominator, e.numerator  # 1/e = k/j
        lhs = abs(ones * b - a * m)
        # (lhs/(b m))^(k/j) <= 1/m  <=>  lhs^k * m^j <= (b m)^k
        return lhs**k * m**j <= (b * m) ** k

    def emissions(self, sigma):
        m = len(sigma)
        if m == 0:
            return
        ones = sigma.count("1")
        for step, q in enumerate(stern_brocot(), start=1):
            if step > self.max_candidates:
                return
            if self._close(ones, m, q):
                yield step, MeasureBall(Bernoulli(q), ZERO, closed=True)
                return

    def spec(self):
        return f"rational_bernoulli:err={fmt_rat(self.err)}"


@dataclass(frozen=True)
class FrequencyLearner(Learner):
    """Nested balls around Ber(freq of ones) shrinking to ``2**-floor(m/a)``.

    Ball ``i`` has radius ``2**-(i+1)`` until the target radius is reached;
    the learner stays null when even the first ball would exceed it, i.e.
    when ``r(m) > 1/4``.
    """

    a: Fraction = Fraction(2)

    def __post_init__(self):
        object.__setattr__(self, "a", parse_rat(self.a))
        if self.a <= 0:
            raise LearnerError("frequency radius divisor must be positive")

    def target_exponent(self, m: int) -> int:
        q = Fraction(m) / self.a
        return q.numerator // q.denominator

    def emissions(self, sigma):
        m = len(sigma)
        k = self.target_exponent(m)
        if k < 2:
            return
        center = Bernoulli(Fraction(sigma.count("1"), m))
        for i in range(1, k):
            yield i, MeasureBall(center, pow2(-(i + 1)))

    def spec(self):
        return f"frequency:radius={fmt_rat(self.a)}"


@dataclass(frozen=True)
class ThresholdWrap(Learner):
    """Silent until the inner trace reaches precision ``f(|sigma|)``, then replays it."""

    inner: Learner
    f: PrecisionSchedule

    def emissions(self, sigma):
        eps = self.f(len(sigma))
        buf = []
        released = False
        for stamp, ball in self.inner.emissions(sigma):
            if released:
                yield stamp, ball
                continue
            buf.append(ball)
            if ball.radius < eps:
                released = True
                for b in buf:
                    yield stamp, b

    def spec(self):
        return f"wrap(f={self.f.spec()},{self.inner.spec()})"


def threshold_wrap(A: Learner, f: PrecisionSchedule) -> Learner:
    if isinstance(A, NullLearner):
        return A
    return ThresholdWrap(A, f)


def _kw(body: str) -> dict:
    return dict(p.split("=", 1) for p in body.split(";") if p)


def parse_learner(text) -> Learner:
    if isinstance(text, Learner):
        return text
    text = text.strip()
    if text.startswith("wrap(") and text.endswith(")"):
        inner = text[5:-1]
        if not inner.startswith("f="):
            raise LearnerError(f"wrap needs f=<schedule> first: {text!r}")
        # the schedule spec never contains parentheses or a top-level comma
        # before the inner learner, except inside an adversary schedule's center
        depth, cut = 0, -1
        for i, c in enumerate(inner):
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
            elif c == "," and depth == 0 and _inner_start(inner[i + 1:]):
                cut = i
                break
        if cut < 0:
            raise LearnerError(f"malformed wrap spec {text!r}")
        return ThresholdWrap(parse_learner(inner[cut + 1:]), parse_schedule(inner[2:cut]))
    kind, _, body = text.partition(":")
    try:
        if kind == "null":
            return NullLearner()
        if kind == "first_bit":
            return FirstBitLearner()
        if kind == "eventually_zero":
            return EventuallyZeroLearner()
        if kind == "rational_bernoulli":
            return RationalBernoulliLearner(_kw(body).get("err", Fraction(1, 3)))
        if kind == "frequency":
            return FrequencyLearner(_kw(body).get("radius", Fraction(2)))
        if kind == "stubborn":
            return StubbornLearner(parse_measure(body))
    except (KeyError, ValueError) as e:
        raise LearnerError(f"bad learner spec {text!r}: {e}") from None
    raise LearnerError(f"unknown learner kind {kind!r}")


_KINDS = ("null", "first_bit", "eventually_zero", "rational_bernoulli", "frequency", "stubborn", "wrap(")


def _inner_start(rest: str) -> bool:
    return rest.startswith(_KINDS)


def make_reference_learner(kind: str, params: dict | None = None) -> Learner:
    params = params or {}
    if kind == "null":
        return NullLearner()
    if kind == "first_bit":
        return FirstBitLearner()
    if kind == "eventually_zero":
        return EventuallyZeroLearner()
    if kind == "rational_bernoulli":
        return RationalBernoulliLearner(params.get("err", Fraction(1, 3)))
    if kind == "frequency":
        return FrequencyLearner(params.get("radius", Fraction(2)))
    if kind == "stubborn":
        return StubbornLearner(parse_measure(params["measure"]))
    raise LearnerError(f"unknown learner kind {kind!r}")
