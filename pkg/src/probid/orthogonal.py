"""Families of mutually singular measures with disjoint clopen separators.

Two constructions are provided:

* frequency windows -- Bernoulli members separated by the count of ones among
  the first ``M`` bits, certified with exact binomial tails;
* coded perturbations -- the host ball's center for ``K`` bits followed by an
  ``s``-bit code, separated exactly by the code bits. These live near the
  family (within ``2**-K`` of the center) rather than inside it, and are the
  only option when the host ball is too small for frequency windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Sequence

from .clopen import ClopenSet, Match, _pattern, check_bits
from .measures import Bernoulli, Coded, Measure, MeasureBall, clopen_measure, nu
from .rational import ONE, ZERO, fmt_rat, pow2


class HypothesisViolation(ValueError):
    """The family cannot host the requested orthogonal measures at this scale."""


@dataclass(frozen=True)
class CountWindow:
    """Sequences whose first ``length`` bits contain between ``lo`` and ``hi`` ones."""

    length: int
    lo: int
    hi: int

    @property
    def granularity(self) -> int:
        return self.length

    def matches(self, sigma: str) -> Match:
        check_bits(sigma)
        head = sigma[: self.length]
        c = head.count("1")
        rest = self.length - len(head)
        if self.lo <= c and c + rest <= self.hi:
            return Match.INSIDE
        if c > self.hi or c + rest < self.lo:
            return Match.OUTSIDE
        return Match.UNDETERMINED

    def measure(self, mu: Measure) -> Fraction:
        if isinstance(mu, Bernoulli):
            return binomial_window(self.length, mu.p, self.lo, self.hi)
        # generic dynamic program over (state, ones so far)
        level = {(mu.initial(), 0): ONE}
        for _ in range(self.length):
            nxt: dict = {}
            for (st, c), pr in level.items():
                q = mu.p_one(st)
                if q != 1:
                    k = (mu.advance(st, 0), c)
                    nxt[k] = nxt.get(k, ZERO) + pr * (1 - q)
                if q != 0:
                    k = (mu.advance(st, 1), c + 1)
                    nxt[k] = nxt.get(k, ZERO) + pr * q
            level = nxt
        return sum((pr for (_, c), pr in level.items() if self.lo <= c <= self.hi), ZERO)

    def isdisjoint(self, other) -> bool:
        if isinstance(other, CountWindow) and other.length == self.length:
            return self.hi < other.lo or other.hi < self.lo
        return _as_clopen(self).isdisjoint(_as_clopen(other))

    def to_clopen(self) -> ClopenSet:
        if self.length > 20:
            raise ValueError("count window too long to enumerate as atoms")
        atoms = [s for s in (format(i, f"0{self.length}b") for i in range(1 << self.length))
                 if self.lo <= s.count("1") <= self.hi]
        return ClopenSet.from_atoms(self.length, atoms)

    def serialize(self) -> str:
        return f"window:M={self.length};lo={self.lo};hi={self.hi}"


def _as_clopen(v) -> ClopenSet:
    return v if isinstance(v, ClopenSet) else v.to_clopen()


def separator_measure(mu: Measure, v) -> Fraction:
    if isinstance(v, ClopenSet):
        return clopen_measure(mu, v)
    return v.measure(mu)


def parse_separator(text: str):
    if text.startswith("window:"):
        f = dict(part.split("=", 1) for part in text[len("window:"):].split(";"))
        return CountWindow(int(f["M"]), int(f["lo"]), int(f["hi"]))
    if text.startswith("coded:"):
        f = dict(part.split("=", 1) for part in text[len("coded:"):].split(";"))
        return coded_separator(int(f["offset"]), f["code"])
    return ClopenSet.parse(text)


def binomial_window(M: int, p: Fraction, lo: int, hi: int) -> Fraction:
    """Exact P(lo <= Binomial(M, p) <= hi)."""
    lo, hi = max(lo, 0), min(hi, M)
    if lo > hi:
        return ZERO
    a, b = p.numerator, p.denominator
    num = sum(comb(M, k) * a**k * (b - a) ** (M - k) for k in range(lo, hi + 1))
    return Fraction(num, b**M)


@dataclass(frozen=True)
class OrthogonalFamily:
    host: MeasureBall
    s: int
    delta: Fraction
    measures: tuple
    separators: tuple
    guarantees: tuple
    method: str
    details: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def L(self) -> int:
        return max((v.granularity for v in self.separators), default=0)

    @property
    def size(self) -> int:
        return len(self.measures)

    def verify(self) -> bool:
        """Re-check disjointness, guarantees and membership from scratch."""
        if len(self.measures) != 2**self.s or len(self.separators) != 2**self.s:
            return False
        if len(set(self.measures)) != len(self.measures):
            return False
        seps = self.separators
        for i in range(len(seps)):
            for j in range(i + 1, len(seps)):
                if not seps[i].isdisjoint(seps[j]):
                    return False
        floor_ = 1 - self.delta / 8
        for xi, v, g in zip(self.measures, seps, self.guarantees):
            if separator_measure(xi, v) != g or g < floor_:
                return False
            if not certify_member(self.host, xi):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "s": self.s,
            "M": self.L,
            "host": self.host.to_json(),
            "delta": fmt_rat(self.delta),
            "params": [m.spec() for m in self.measures],
            "separators": [self._sep_ref(j, v) for j, v in enumerate(self.separators)],
            "guarantees": [fmt_rat(g) for g in self.guarantees],
            **{k: v for k, v in self.details.items()},
        }


    def _sep_ref(self, j: int, v) -> str:
        # coded separators are described by construction, not by atom list
        if self.method == "coded":
            return coded_separator_ref(self.details["offset"], format(j, f"0{self.s}b"))
        return v.serialize()


def coded_separator_ref(offset: int, code: str) -> str:
    return f"coded:offset={offset};code={code}"


def coded_separator(offset: int, code: str) -> ClopenSet:
    """Sequences whose bits ``offset .. offset+len(code)-1`` spell ``code``."""
    s = len(code)
    g = offset + s
    return ClopenSet(g, _pattern(1 << s, 1, 1 << g) << int(code, 2))


def certify_member(ball: MeasureBall, m: Measure) -> bool:
    if m == ball.center:
        return ball.closed or ball.radius > 0
    return ball.certifies(m, max_M=40)


def trivial_family(D: MeasureBall, delta: Fraction) -> OrthogonalFamily:
    return OrthogonalFamily(D, 0, Fraction(delta), (D.center,), (ClopenSet.full(),), (ONE,), "trivial")


def frequency_windows(M: int, s: int, lo: Fraction = ZERO, hi: Fraction = ONE) -> tuple:
    """``2**s`` disjoint count windows splitting the frequency range [lo, hi] evenly."""
    n = 2**s
    cuts = [lo + (hi - lo) * j / n for j in range(1, n)]
    bounds = [0] + [_ceil(c * M) for c in cuts] + [M + 1]
    wins = []
    for j in range(n):
        a, b = bounds[j], bounds[j + 1] - 1
        if a > b:
            return ()
        wins.append(CountWindow(M, a, b))
    return tuple(wins)


def _ceil(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def window_family(
    member: Callable[[Fraction], Measure],
    lo: Fraction,
    hi: Fraction,
    D: MeasureBall,
    s: int,
    delta: Fraction,
    M_start: int = 64,
    M_cap: int = 1024,
) -> OrthogonalFamily:
    """Evenly spaced Bernoulli members in [lo, hi] separated by frequency windows.

    The window length starts at ``M_start`` and doubles until every exact
    binomial guarantee reaches 1 - delta/8.
    """
    delta = Fraction(delta)
    if s == 0:
        return trivial_family(D, delta)
    n = 2**s
    params = [lo + (hi - lo) * (2 * j + 1) / (2 * n) for j in range(n)]
    measures = tuple(member(p) for p in params)
    for m in measures:
        if not certify_member(D, m):
            raise HypothesisViolation(f"{m.spec()} not certified inside {D}")
    floor_ = 1 - delta / 8
    M = M_start
    while M <= M_cap:
        wins = frequency_windows(M, s, lo, hi)
        if wins:
            gs = tuple(w.measure(m) for w, m in zip(wins, measures))
            if all(g >= floor_ for g in gs):
                return OrthogonalFamily(D, s, delta, measures, wins, gs, "windows",
                                        {"window_length": M, "param_range": [fmt_rat(lo), fmt_rat(hi)]})
        M *= 2
    raise HypothesisViolation(
        f"cannot separate {n} members of [{lo}, {hi}] with windows of length <= {M_cap}")


def coded_offset(D: MeasureBall) -> int:
    """Least K with 2**-K inside the host radius (strictly, for open balls)."""
    if D.radius == 0:
        raise HypothesisViolation("a radius-0 ball hosts a single measure")
    K = 0
    while not (pow2(-K) <= D.radius if D.closed else pow2(-K) < D.radius):
        K += 1
    return K


def coded_granularity(D: MeasureBall, s: int) -> int:
    return 0 if s == 0 else coded_offset(D) + s


def coded_family(D: MeasureBall, s: int, delta: Fraction) -> OrthogonalFamily:
    """``2**s`` coded perturbations of the host center, separated by their code bits."""
    delta = Fraction(delta)
    if s == 0:
        return trivial_family(D, delta)
    K = coded_offset(D)
    measures, seps, gs = [], [], []
    for j in range(2**s):
        code = format(j, f"0{s}b")
        xi = Coded(D.center, K, code)
        v = coded_separator(K, code)
        measures.append(xi)
        seps.append(v)
        gs.append(clopen_measure(xi, v))
    for xi in measures:
        if D.contains(xi, K) != "in":
            raise HypothesisViolation(f"coded measure not certified inside {D}")
    return OrthogonalFamily(D, s, delta, tuple(measures), tuple(seps), tuple(gs), "coded",
                            {"offset": K, "base": D.center.spec()})


def mixture_family(D: MeasureBall, s: int, delta: Fraction) -> OrthogonalFamily:
    """The point-mixture class has exactly two mutually singular members."""
    delta = Fraction(delta)
    if s == 0:
        return trivial_family(D, delta)
    if s > 1:
        raise HypothesisViolation(
            "the point-mixture family has only two orthogonal members (nu_0, nu_1)")
    members = (nu(0), nu(1))
    for m in members:
        if not certify_member(D, m):
            raise HypothesisViolation(f"{m.spec()} is not inside {D}")
    seps = (ClopenSet.cylinder("0"), ClopenSet.cylinder("1"))
    gs = tuple(clopen_measure(m, v) for m, v in zip(members, seps))
    return OrthogonalFamily(D, 1, delta, members, seps, gs, "mixture")


def disjoint_all(seps: Sequence) -> bool:
    return all(seps[i].isdisjoint(seps[j]) for i in range(len(seps)) for j in range(i + 1, len(seps)))
