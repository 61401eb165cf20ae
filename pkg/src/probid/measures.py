"""Exact computable measures on the Cantor space and the metric between them.

Every bundled measure is a finite-state emitter: a hashable state, the exact
conditional probability that the next bit is 1, and a transition. Cylinder
probabilities, clopen masses and the distance are all computed from that
description in rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable

from .clopen import ClopenSet, check_bits, full_mask, split_mask
from .rational import ONE, ZERO, Interval, fmt_rat, parse_rat, pow2


class MeasureError(ValueError):
    pass


def _unit(name: str, p) -> Fraction:
    p = parse_rat(p)
    if not 0 <= p <= 1:
        raise MeasureError(f"parameter {name}={p} out of range [0, 1]")
    return p


class Measure:
    """Base class; subclasses are frozen dataclasses."""

    kind = "abstract"

    def initial(self) -> Hashable:
        return None

    def p_one(self, state) -> Fraction:
        raise NotImplementedError

    def advance(self, state, bit: int) -> Hashable:
        return state

    def spec(self) -> str:
        raise NotImplementedError

    def cylinder_prob(self, sigma: str) -> Fraction:
        state = self.initial()
        prob = ONE
        for c in sigma:
            q = self.p_one(state)
            if c == "1":
                prob *= q
            elif c == "0":
                prob *= 1 - q
            else:
                raise ValueError(f"not a bit string: {sigma!r}")
            if prob == 0:
                return ZERO
            state = self.advance(state, 1 if c == "1" else 0)
        return prob

    def __str__(self) -> str:
        return self.spec()


@dataclass(frozen=True)
class Bernoulli(Measure):
    """Product measure; ``p`` is the probability of a 1."""

    p: Fraction
    kind = "bernoulli"

    def __post_init__(self):
        object.__setattr__(self, "p", _unit("p", self.p))

    def p_one(self, state):
        return self.p

    def cylinder_prob(self, sigma):
        ones = check_bits(sigma).count("1")
        return self.p**ones * (1 - self.p) ** (len(sigma) - ones)

    def spec(self):
        return f"bernoulli:p={fmt_rat(self.p)}"


@dataclass(frozen=True)
class MuP(Measure):
    """First bit is 1; after ``...1 0^k`` the next bit is 1 with probability p/(k+1)."""

    p: Fraction
    kind = "mu_p"

    def __post_init__(self):
        object.__setattr__(self, "p", _unit("p", self.p))

    def initial(self):
        return "start"

    def p_one(self, state):
        if state == "start":
            return ONE
        return self.p / (state + 1)

    def advance(self, state, bit):
        if bit:
            return 0
        return 0 if state == "start" else state + 1

    def spec(self):
        return f"mu_p:p={fmt_rat(self.p)}"


@dataclass(frozen=True)
class PointMixture(Measure):
    """``p`` times the Dirac measure on 0^ω plus ``1-p`` times the one on 1^ω."""

    p: Fraction
    kind = "mixture"

    def __post_init__(self):
        object.__setattr__(self, "p", _unit("p", self.p))

    def initial(self):
        return "start"

    def p_one(self, state):
        if state == "start":
            return 1 - self.p
        return ONE if state == "ones" else ZERO

    def advance(self, state, bit):
        if state == "start":
            return "ones" if bit else "zeros"
        return state

    def spec(self):
        return f"mixture:p={fmt_rat(self.p)}"


@dataclass(frozen=True)
class Markov(Measure):
    """First-order chain; ``rows[i][j]`` is P(next = j | previous = i)."""

    rows: tuple
    init: Fraction
    kind = "markov"

    def __post_init__(self):
        rows = tuple(tuple(_unit("row entry", x) for x in r) for r in self.rows)
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise MeasureError("markov rows must be a 2x2 matrix")
        if any(sum(r) != 1 for r in rows):
            raise MeasureError("markov rows must be stochastic")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "init", _unit("init", self.init))

    def p_one(self, state):
        if state is None:
            return self.init
        return self.rows[state][1]

    def advance(self, state, bit):
        return bit

    def spec(self):
        rows = "|".join(",".join(fmt_rat(x) for x in r) for r in self.rows)
        return f"markov:rows={rows};init={fmt_rat(self.init)}"


@dataclass(frozen=True)
class PointMass(Measure):
    """Dirac measure on ``sigma`` followed by 0^ω."""

    sigma: str
    kind = "point"

    def __post_init__(self):
        check_bits(self.sigma)

    def initial(self):
        return 0

    def p_one(self, state):
        if state < len(self.sigma) and self.sigma[state] == "1":
            return ONE
        return ZERO

    def advance(self, state, bit):
        return min(state + 1, len(self.sigma))

    def spec(self):
        return f"point:sigma={self.sigma}"


@dataclass(frozen=True)
class Coded(Measure):
    """``base`` for ``offset`` bits, then the fixed bits ``code``, then ``base`` again.

    Two coded measures with the same base and offset but different codes of
    equal length are mutually singular, and both lie within distance
    ``2**-offset`` of the base.
    """

    base: Measure
    offset: int
    code: str
    kind = "coded"

    def __post_init__(self):
        check_bits(self.code)
        if self.offset < 0:
            raise MeasureError("offset must be non-negative")

    def initial(self):
        return (0, self.base.initial())

    def p_one(self, state):
        pos, inner = state
        k = pos - self.offset
        if 0 <= k < len(self.code):
            return ONE if self.code[k] == "1" else ZERO
        return self.base.p_one(inner)

    def advance(self, state, bit):
        pos, inner = state
        k = pos - self.offset
        if not 0 <= k < len(self.code):
            inner = self.base.advance(inner, bit)
        return (min(pos + 1, self.offset + len(self.code)), inner)

    def spec(self):
        return f"coded:K={self.offset};code={self.code};base={self.base.spec()}"


def nu(i: int) -> PointMixture:
    """The Dirac measure on ``i^ω`` as a member of the point-mixture family."""
    return PointMixture(ONE if i == 0 else ZERO)


def _fields(body: str, leading: tuple[str, ...] = ()) -> dict:
    out = {}
    rest = body
    for key in leading:
        head, sep, rest = rest.partition(";")
        if not head.startswith(key + "="):
            raise MeasureError(f"expected field {key!r} in {body!r}")
        out[key] = head[len(key) + 1:]
        if not sep:
            rest = ""
    if rest:
        for part in rest.split(";"):
            k, sep, v = part.partition("=")
            if not sep:
                raise MeasureError(f"malformed field {part!r}")
            out[k] = v
    return out


def parse_measure(text: str) -> Measure:
    """Parse a measure spec such as ``bernoulli:p=1/4`` or ``point:sigma=10``."""
    if isinstance(text, Measure):
        return text
    text = text.strip()
    kind, sep, body = text.partition(":")
    try:
        if kind == "coded":
            head, sep2, base = body.partition(";base=")
            if not sep2:
                raise MeasureError("coded spec needs base=")
            f = _fields(head)
            return Coded(parse_measure(base), int(f["K"]), f.get("code", ""))
        f = _fields(body)
        if kind == "bernoulli":
            return Bernoulli(f["p"])
        if kind == "mu_p":
            return MuP(f["p"])
        if kind == "mixture":
            return PointMixture(f["p"])
        if kind == "markov":
            rows = tuple(tuple(parse_rat(x) for x in r.split(",")) for r in f["rows"].split("|"))
            return Markov(rows, parse_rat(f["init"]))
        if kind == "point":
            return PointMass(f.get("sigma", ""))
    except KeyError as e:
        raise MeasureError(f"missing field {e} in measure spec {text!r}") from None
    raise MeasureError(f"unknown measure kind {kind!r}")


def make_measure(spec) -> Measure:
    return parse_measure(spec)


def cylinder_prob(mu: Measure, sigma: str) -> Fraction:
    return mu.cylinder_prob(sigma)


def clopen_measure(mu: Measure, c: ClopenSet) -> Fraction:
    """Exact ``mu(C)``, descending the cylinder tree with memoized sub-masks."""
    return mask_measure(mu, c.granularity, c.mask)


def mask_measure(mu: Measure, g: int, mask: int) -> Fraction:
    memo: dict = {}

    def rec(state, g, mask):
        if mask == 0:
            return ZERO
        if mask == full_mask(g):
            return ONE
        key = (state, g, mask)
        hit = memo.get(key)
        if hit is not None:
            return hit
        q = mu.p_one(state)
        lo, hi = split_mask(mask, g)
        total = ZERO
        if q != 1:
            total += (1 - q) * rec(mu.advance(state, 0), g - 1, lo)
        if q != 0:
            total += q * rec(mu.advance(state, 1), g - 1, hi)
        memo[key] = total
        return total

    return rec(mu.initial(), g, mask)


def rho_profile(mu: Measure, nu_: Measure, M: int) -> list[Fraction]:
    """``[rho_0, ..., rho_M]`` via the positive-part identity.

    Strings are grouped by (state of mu, state of nu, mu-prob, nu-prob); the
    group is a sufficient statistic for both the positive part and every
    extension, so product-like pairs cost O(n) groups per level.
    """
    if mu == nu_:
        return [ZERO] * (M + 1)
    level = {(mu.initial(), nu_.initial(), ONE, ONE): 1}
    out = [ZERO]
    for _ in range(M):
        nxt: dict = {}
        for (sa, sb, pa, pb), mult in level.items():
            qa, qb = mu.p_one(sa), nu_.p_one(sb)
            for bit, wa, wb in ((0, 1 - qa, 1 - qb), (1, qa, qb)):
                a, b = pa * wa, pb * wb
                if a == 0 and b == 0:
                    continue
                key = (mu.advance(sa, bit), nu_.advance(sb, bit), a, b)
                nxt[key] = nxt.get(key, 0) + mult
        level = nxt
        out.append(sum((mult * (a - b) for (_, _, a, b), mult in level.items() if a > b), ZERO))
    return out


def rho_n(mu: Measure, nu_: Measure, n: int) -> Fraction:
    """``max over C in Gamma_n of |mu(C) - nu(C)|``."""
    return rho_profile(mu, nu_, n)[n]


def rho_interval(mu: Measure, nu_: Measure, M: int) -> Interval:
    """An interval of width at most ``2**-M`` containing ``rho(mu, nu)``."""
    if mu == nu_:
        return Interval(ZERO, ZERO)
    prof = rho_profile(mu, nu_, M)
    partial = sum((pow2(-n) * r for n, r in enumerate(prof)), ZERO)
    tail = pow2(-M)
    return Interval(partial + tail * prof[M], partial + tail)


@dataclass(frozen=True)
class MeasureBall:
    center: Measure
    radius: Fraction
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "radius", parse_rat(self.radius))
        if self.radius < 0:
            raise MeasureError("ball radius must be non-negative")

    def _inside(self, d: Fraction) -> bool:
        return d <= self.radius if self.closed else d < self.radius

    def contains(self, nu_: Measure, M: int = 12) -> str:
        """Three-valued membership: ``"in"``, ``"out"`` or ``"unknown"`` at precision M."""
        iv = rho_interval(self.center, nu_, M)
        if self._inside(iv.hi):
            return "in"
        if not self._inside(iv.lo):
            return "out"
        return "unknown"

    def certifies(self, nu_: Measure, max_M: int = 24) -> bool:
        """True when membership of ``nu_`` is certified at some precision <= max_M."""
        M = 4
        while True:
            verdict = self.contains(nu_, M)
            if verdict != "unknown" or M >= max_M:
                return verdict == "in"
            M = min(max_M, M + 4)

    def contains_ball(self, other: "MeasureBall", M: int = 12) -> bool:
        """Certified inclusion ``other ⊆ self`` by the triangle inequality."""
        hi = rho_interval(self.center, other.center, M).hi + other.radius
        if self.closed or not other.closed:
            return hi <= self.radius
        return hi < self.radius

    def to_json(self) -> dict:
        return {"center": self.center.spec(), "radius": fmt_rat(self.radius), "closed": self.closed}

    @classmethod
    def from_json(cls, d: dict) -> "MeasureBall":
        return cls(parse_measure(d["center"]), parse_rat(d["radius"]), bool(d.get("closed", False)))

    def __str__(self) -> str:
        kind = "closed" if self.closed else "open"
        return f"{kind} ball({self.center.spec()}, {fmt_rat(self.radius)})"


def clopen_gap_bound(ball: MeasureBall, g: int) -> Fraction:
    """For every nu in the ball and every C of granularity <= g, |mu(C)-nu(C)| is below this."""
    return (1 << g) * ball.radius
