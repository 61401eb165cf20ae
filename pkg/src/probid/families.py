"""One-parameter measure families with grid coverings and orthogonal-family hooks."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .measures import Bernoulli, Measure, MeasureBall, MeasureError, MuP, PointMixture, nu, parse_measure
from .orthogonal import (
    HypothesisViolation,
    OrthogonalFamily,
    coded_family,
    coded_granularity,
    mixture_family,
    trivial_family,
    window_family,
)
from .rational import ONE, ZERO, fmt_rat, parse_rat


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class MeasureFamily:
    """A family ``{member(p) : p in [0, 1]}`` with Lipschitz constant ``kappa``.

    ``rho(member(p), member(q)) <= kappa * |p - q|`` is what makes the parameter
    grid a covering: a grid of spacing ``eps / (8 kappa)`` with balls of radius
    ``eps / 4`` covers every member, and any ball of radius ``eps`` around a
    member contains the grid ball nearest to its center.
    """

    name: str
    kappa: Fraction
    description: str = ""

    def member(self, p) -> Measure:
        raise NotImplementedError

    def param_of(self, m: Measure):
        """The parameter of ``m`` if it is a member, else None."""
        return None

    def spec(self) -> str:
        return self.name

    # covering ----------------------------------------------------------

    def grid(self, eps) -> list[Fraction]:
        eps = parse_rat(eps)
        if eps <= 0:
            raise FamilyError("covering precision must be positive")
        return list(_grid(eps / (8 * self.kappa)))

    def cover(self, eps) -> list[MeasureBall]:
        return list(_cover(self, parse_rat(eps)))

    def nearest_grid_index(self, eps, p) -> int:
        eps, p = parse_rat(eps), parse_rat(p)
        h = eps / (8 * self.kappa)
        size = len(_grid(h))
        return min(int(p / h + Fraction(1, 2)), size - 1)

    def covering_bound(self, eps, p) -> Fraction:
        """Certified upper bound on rho(member(p), center of the nearest grid ball)."""
        eps, p = parse_rat(eps), parse_rat(p)
        g = self.grid(eps)[self.nearest_grid_index(eps, p)]
        return self.kappa * abs(p - g)

    # parameters inside a ball ------------------------------------------

    def params_in_ball(self, ball: MeasureBall):
        """A parameter interval whose members are all certified inside ``ball``.

        Uses half the Lipschitz radius so that window members are certified
        comfortably; returns None when the center is not a member.
        """
        c = self.param_of(ball.center)
        if c is None or ball.radius == 0:
            return None
        half = ball.radius / (2 * self.kappa)
        return (max(ZERO, c - half), min(ONE, c + half))

    # orthogonal families --------------------------------------------------

    def orthogonal_family(self, D: MeasureBall, s: int, delta) -> OrthogonalFamily:
        raise FamilyError(f"family {self.name} has no orthogonal-family generator")

    def separator_granularity(self, D: MeasureBall, s: int, delta) -> int:
        return self.orthogonal_family(D, s, delta).L

    def explanations(self, m: Measure) -> tuple:
        """Measures a learner may output on sequences sampled from ``m``."""
        return (m,)

    def to_json(self) -> dict:
        return {"name": self.name, "kappa": fmt_rat(self.kappa), "description": self.description}


@lru_cache(maxsize=64)
def _grid(h: Fraction) -> tuple:
    n = -((-1 * h.denominator) // h.numerator)  # ceil(1/h)
    return tuple(h * i for i in range(n)) + (ONE,)


@lru_cache(maxsize=64)
def _cover(fam: MeasureFamily, eps: Fraction) -> tuple:
    r = eps / 4
    return tuple(MeasureBall(fam.member(p), r) for p in fam.grid(eps))


@dataclass(frozen=True)
class BernoulliFamily(MeasureFamily):
    name: str = "bernoulli"
    kappa: Fraction = Fraction(2)
    description: str = "Ber(p), p in [0,1] = probability of a 1"
    orth: str = "auto"  # auto | windows | coded
    window_cap: int = 1024

    def member(self, p):
        return Bernoulli(parse_rat(p))

    def param_of(self, m):
        return m.p if isinstance(m, Bernoulli) else None

    def spec(self):
        return self.name if self.orth == "auto" else f"{self.name}:orth={self.orth}"

    def _method(self, D: MeasureBall) -> str:
        if self.orth != "auto":
            return self.orth
        iv = self.params_in_ball(D)
        return "windows" if iv is not None and iv[1] - iv[0] >= Fraction(1, 2) else "coded"

    def orthogonal_family(self, D, s, delta):
        delta = parse_rat(delta)
        if s == 0:
            return trivial_family(D, delta)
        if self._method(D) == "windows":
            iv = self.params_in_ball(D)
            if iv is None:
                raise HypothesisViolation(f"{D} is not centered at a Bernoulli member")
            return _windows_cached(self, D, s, delta)
        return coded_family(D, s, delta)

    def separator_granularity(self, D, s, delta):
        if s == 0:
            return 0
        if self._method(D) == "coded":
            return coded_granularity(D, s)
        return self.orthogonal_family(D, s, delta).L


@lru_cache(maxsize=256)
def _windows_cached(fam: BernoulliFamily, D: MeasureBall, s: int, delta: Fraction) -> OrthogonalFamily:
    lo, hi = fam.params_in_ball(D)
    return window_family(fam.member, lo, hi, D, s, delta, M_cap=fam.window_cap)


@dataclass(frozen=True)
class MuPFamily(MeasureFamily):
    # each conditional probability moves by at most |p - q|, so rho_n <= (n-1)|p - q|
    name: str = "mu_p"
    kappa: Fraction = Fraction(1)
    description: str = "first bit 1, then P(1 | ...1 0^k) = p/(k+1)"

    def member(self, p):
        return MuP(parse_rat(p))

    def param_of(self, m):
        return m.p if isinstance(m, MuP) else None

    def orthogonal_family(self, D, s, delta):
        return coded_family(D, s, parse_rat(delta))

    def separator_granularity(self, D, s, delta):
        return coded_granularity(D, s)


@dataclass(frozen=True)
class MixtureFamily(MeasureFamily):
    name: str = "mixture"
    kappa: Fraction = Fraction(2)
    description: str = "p*nu_0 + (1-p)*nu_1, the Dirac measures on 0^w and 1^w"

    def member(self, p):
        return PointMixture(parse_rat(p))

    def param_of(self, m):
        return m.p if isinstance(m, PointMixture) else None

    def orthogonal_family(self, D, s, delta):
        return mixture_family(D, s, parse_rat(delta))

    def separator_granularity(self, D, s, delta):
        if s == 0:
            return 0
        if s > 1:
            raise HypothesisViolation(
                "the point-mixture family has only two orthogonal members (nu_0, nu_1)")
        return 1

    def explanations(self, m):
        if not isinstance(m, PointMixture):
            return (m,)
        out = [m]
        if m.p > 0 and m != nu(0):
            out.append(nu(0))
        if m.p < 1 and m != nu(1):
            out.append(nu(1))
        return tuple(out)


@dataclass(frozen=True)
class RationalBernoulliFamily(MeasureFamily):
    """Bernoulli measures with rational parameter; countable, not compact."""

    name: str = "rational_bernoulli"
    kappa: Fraction = Fraction(2)
    description: str = "Ber(q), q rational; no finite covering is offered"

    def member(self, p):
        return Bernoulli(parse_rat(p))

    def param_of(self, m):
        return m.p if isinstance(m, Bernoulli) else None

    def cover(self, eps):
        raise FamilyError("rational_bernoulli is not compact and has no covering generator")


@dataclass(frozen=True)
class SingletonFamily(MeasureFamily):
    name: str = "singleton"
    kappa: Fraction = Fraction(0)
    description: str = "a single measure"
    measure: Measure = Bernoulli(Fraction(1, 2))

    def member(self, p=None):
        return self.measure

    def param_of(self, m):
        return ZERO if m == self.measure else None

    def spec(self):
        return f"singleton:{self.measure.spec()}"

    def grid(self, eps):
        if parse_rat(eps) <= 0:
            raise FamilyError("covering precision must be positive")
        return [ZERO]

    def nearest_grid_index(self, eps, p):
        return 0

    def params_in_ball(self, ball):
        return None

    def orthogonal_family(self, D, s, delta):
        return coded_family(D, s, parse_rat(delta))

    def separator_granularity(self, D, s, delta):
        return coded_granularity(D, s)


FAMILIES = {
    "bernoulli": BernoulliFamily,
    "mu_p": MuPFamily,
    "mixture": MixtureFamily,
    "rational_bernoulli": RationalBernoulliFamily,
}


def parse_family(text) -> MeasureFamily:
    """``bernoulli``, ``bernoulli:orth=windows``, ``mixture``, ``singleton:<measure>``, ..."""
    if isinstance(text, MeasureFamily):
        return text
    text = text.strip()
    name, _, body = text.partition(":")
    if name == "singleton":
        try:
            return SingletonFamily(measure=parse_measure(body))
        except MeasureError as e:
            raise FamilyError(str(e)) from None
    if name not in FAMILIES:
        raise FamilyError(f"unknown family {name!r}")
    kw = {}
    if body:
        for part in body.split(";"):
            k, _, v = part.partition("=")
            if name == "bernoulli" and k == "orth" and v in ("auto", "windows", "coded"):
                kw["orth"] = v
            elif name == "bernoulli" and k == "cap":
                kw["window_cap"] = int(v)
            else:
                raise FamilyError(f"unknown option {part!r} for family {name}")
    return FAMILIES[name](**kw)


def family_list() -> list[dict]:
    return [cls().to_json() for cls in FAMILIES.values()] + [SingletonFamily().to_json()]
