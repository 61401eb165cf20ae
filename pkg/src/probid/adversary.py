"""Nullity amplification and the diagonalization loop, at desk scale.

Every stage works with exact rationals: the precision set of the learner,
the covering ball it fills, the orthogonal family hosted there, the
pigeonhole choice of a separator, and deficiency certificates showing that the
learner's precise answers are inconsistent on most of that separator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .clopen import ClopenSet
from .deficiency import Codebook, lemma1_certificate
from .families import MeasureFamily, parse_family
from .learners import (
    Learner,
    PrecisionSchedule,
    null_set,
    prec_set,
    sweep,
    threshold_wrap,
)
from .measures import Measure, MeasureBall, clopen_measure, parse_measure
from .orthogonal import OrthogonalFamily, separator_measure
from .rational import ZERO, fmt_rat, parse_rat, pow2


DEFAULT_D = 8


def stage_eps(n: int, delta: Fraction, base: MeasureBall) -> Fraction:
    return min(pow2(-n) * delta / 4, base.radius)


def stage_s(n: int, s_override=None, d: int = DEFAULT_D) -> int:
    return int(s_override) if s_override is not None else 4 * n + d


def ball_inside(outer: MeasureBall, inner: MeasureBall, fam: MeasureFamily | None = None, M: int = 16) -> bool:
    """Certified ``inner ⊆ outer``.

    When both centers are family members only the Lipschitz bound is used,
    which keeps covering scans cheap and the choice of ball reproducible.
    """
    if fam is not None:
        p, q = fam.param_of(outer.center), fam.param_of(inner.center)
        if p is not None and q is not None:
            d = fam.kappa * abs(p - q) + inner.radius
            return d < outer.radius or (d == outer.radius and (outer.closed or not inner.closed))
    return outer.contains_ball(inner, M)


@dataclass(frozen=True)
class Schedule:
    family: MeasureFamily
    delta: Fraction
    n: int
    s: int
    d: int
    eps: Fraction
    base: MeasureBall
    covering: tuple
    L: int
    _cand: list = field(default_factory=list, compare=False, hash=False, repr=False)

    @property
    def f(self) -> Fraction:
        return pow2(-self.L - self.s)

    @property
    def k(self) -> int:
        return len(self.covering)

    def candidates(self):
        """Indices of covering balls certified inside the base ball, in grid order."""
        if not self._cand:
            self._cand.append(tuple(i for i, D in enumerate(self.covering)
                                    if ball_inside(self.base, D, self.family)))
        return self._cand[0]

    def orthogonal(self, i: int) -> OrthogonalFamily:
        return _orth(self.family, self.covering[i], self.s, self.delta)

    def to_json(self) -> dict:
        return {
            "n": self.n, "s": self.s, "d": self.d, "eps": fmt_rat(self.eps),
            "covering_size": self.k,
            "covering_radius": fmt_rat(self.covering[0].radius) if self.covering else None,
            "grid_spacing": fmt_rat(self.eps / (8 * self.family.kappa)) if self.family.kappa else None,
            "L": self.L, "f": fmt_rat(self.f),
        }


@lru_cache(maxsize=512)
def _orth(fam: MeasureFamily, D: MeasureBall, s: int, delta: Fraction) -> OrthogonalFamily:
    return fam.orthogonal_family(D, s, delta)


def build_schedule(F, delta, n: int, base: MeasureBall, s_override=None, d: int = DEFAULT_D) -> Schedule:
    return _build_schedule(parse_family(F), parse_rat(delta), n, base,
                           None if s_override is None else int(s_override), int(d))


@lru_cache(maxsize=64)
def _build_schedule(F, delta, n, base, s_override, d) -> Schedule:
    if n < 1:
        raise ValueError("stages start at n = 1")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    s = stage_s(n, s_override, d)
    eps = stage_eps(n, delta, base)
    covering = tuple(F.cover(eps))
    L = max(F.separator_granularity(D, s, delta) for D in covering)
    return Schedule(F, delta, n, s, d, eps, base, covering, L)


@dataclass(frozen=True)
class AdversarySchedule(PrecisionSchedule):
    """``f(n) = 2**-(L(n) + s(n))`` read off the stage-n schedule."""

    family: MeasureFamily
    delta: Fraction
    base: MeasureBall
    s_override: int | None = None
    d: int = DEFAULT_D

    def __call__(self, n):
        if n < 1:
            n = 1
        return build_schedule(self.family, self.delta, n, self.base, self.s_override, self.d).f

    def spec(self):
        s = "" if self.s_override is None else f"s={self.s_override};"
        return (f"adversary:family={self.family.spec()};delta={fmt_rat(self.delta)};{s}d={self.d};"
                f"radius={fmt_rat(self.base.radius)};closed={int(self.base.closed)};"
                f"center={self.base.center.spec()}")

    @classmethod
    def parse(cls, body: str) -> "AdversarySchedule":
        head, sep, center = body.partition("center=")
        if not sep:
            raise ValueError("adversary schedule needs center=<measure spec> last")
        kw = {}
        for part in head.rstrip(";").split(";"):
            k, _, v = part.partition("=")
            kw[k] = v
        base = MeasureBall(parse_measure(center), parse_rat(kw["radius"]), kw.get("closed", "0") == "1")
        return cls(parse_family(kw["family"]), parse_rat(kw["delta"]), base,
                   int(kw["s"]) if "s" in kw else None, int(kw.get("d", DEFAULT_D)))


# pigeonhole ------------------------------------------------------------


def pigeonhole_select(centers: list[Measure], fam: OrthogonalFamily) -> tuple[int, Fraction]:
    """First ``j`` minimising the average mass ``beta(V_j)`` of the centers."""
    if not centers:
        raise ValueError("pigeonhole needs at least one center")
    betas = separator_averages(centers, fam)
    j = min(range(len(betas)), key=lambda k: (betas[k], k))
    return j, betas[j]


def separator_averages(centers: list[Measure], fam: OrthogonalFamily) -> list[Fraction]:
    counts: dict = {}
    for c in centers:
        counts[c] = counts.get(c, 0) + 1
    t = len(centers)
    return [sum((k * separator_measure(c, v) for c, k in counts.items()), ZERO) / t for v in fam.separators]


# one stage -------------------------------------------------------------


@dataclass
class InconsistencyReport:
    stage: int
    verdict: str  # stage-witness | no-witness | precision-sparse
    schedule: Schedule
    eta: Fraction
    delta: Fraction
    budget: int
    threshold: int
    target: Fraction
    prec: ClopenSet
    null: ClopenSet
    covering_index: int | None = None
    family: OrthogonalFamily | None = None
    alphas: list = field(default_factory=list)  # (sigma, ball)
    j: int | None = None
    beta: Fraction | None = None
    xi: Measure | None = None
    masses: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)
    cert_of_alpha: dict = field(default_factory=dict)
    inconsistent: list = field(default_factory=list)
    witness_ball: MeasureBall | None = None
    reason: str = ""
    learner: str = ""
    betas: list = field(default_factory=list)

    @property
    def t(self) -> int:
        return len(self.alphas)

    @property
    def separator(self):
        return None if self.family is None else self.family.separators[self.j]

    def succ_bounds(self) -> tuple[Fraction, Fraction]:
        return succ_upper_bound(self), succ_upper_bound(self, combined=True)

    def to_json(self) -> dict:
        sch = self.schedule
        d = {
            "stage": self.stage,
            "verdict": self.verdict,
            "learner": self.learner,
            "reason": self.reason,
            "schedule": sch.to_json(),
            "eta": fmt_rat(self.eta),
            "delta": fmt_rat(self.delta),
            "budget": self.budget,
            "threshold": self.threshold,
            "target": fmt_rat(self.target),
            "prec_set": self.prec.serialize(),
            "null_set": self.null.serialize(),
        }
        if self.family is None:
            d["masses"] = {k: fmt_rat(v) for k, v in self.masses.items()}
            return d
        D = sch.covering[self.covering_index]
        d["covering"] = {"index": self.covering_index, "center": D.center.spec(),
                         "radius": fmt_rat(D.radius), "closed": D.closed}
        d["family"] = self.family.to_json()
        d["alphas"] = [{"sigma": s, **b.to_json(), "certificate": self.cert_of_alpha[b]}
                       for s, b in self.alphas]
        d["pigeonhole"] = {"j": self.j, "beta": fmt_rat(self.beta), "t": self.t,
                           "bound": fmt_rat(pow2(-sch.s)), "betas": [fmt_rat(b) for b in self.betas]}
        d["xi"] = self.xi.spec()
        d["masses"] = {k: fmt_rat(v) for k, v in self.masses.items()}
        d["certificates"] = [c.to_json(include_clopen=False) for c in self.certificates]
        d["inconsistent"] = self.inconsistent
        ub, comb = self.succ_bounds()
        d["succ_upper_bound"] = fmt_rat(ub)
        d["succ_upper_bound_with_null"] = fmt_rat(comb)
        if self.witness_ball is not None:
            d["witness_ball"] = self.witness_ball.to_json()
        return d


def _as_clopen(v) -> ClopenSet:
    return v if isinstance(v, ClopenSet) else v.to_clopen()


def find_inconsistency(
    A: Learner,
    F,
    sched: Schedule,
    eta,
    delta,
    book: Codebook,
    budget: int,
    threshold: int | None = None,
    target=None,
) -> InconsistencyReport:
    """Run one stage of the nullity-amplification argument.

    ``book`` receives one registration per distinct precise ball. The report
    is a ``stage-witness`` when the certified success bound falls below
    ``target`` (default ``delta``).
    """
    F = parse_family(F)
    eta, delta = parse_rat(eta), parse_rat(delta)
    n = sched.n
    threshold = n if threshold is None else int(threshold)
    target = delta if target is None else parse_rat(target)
    f = sched.f
    traces = sweep(A, n, budget)
    prec = prec_set(A, _Const(f), n, budget)
    null = null_set(A, n, budget)
    rep = InconsistencyReport(n, "precision-sparse", sched, eta, delta, budget, threshold, target, prec, null)
    rep.learner = A.spec()
    rep.masses = {"prec_center": clopen_measure(sched.base.center, prec),
                  "null_center": clopen_measure(sched.base.center, null)}
    if prec.is_empty:
        rep.reason = "no string reaches precision f(n)"
        return rep

    need = 1 - eta - 3 * delta / 4
    slack_g = n
    chosen = None
    for i in sched.candidates():
        D = sched.covering[i]
        if clopen_measure(D.center, prec) - pow2(slack_g) * D.radius >= need:
            chosen = i
            break
    if chosen is None:
        rep.reason = "no covering ball inside the base ball is filled by the precision set"
        return rep

    fam = sched.orthogonal(chosen)
    rep.covering_index, rep.family = chosen, fam
    rep.alphas = [(t.input, t.first_precise(f)) for t in traces if t.first_precise(f) is not None]
    rep.betas = separator_averages([b.center for _, b in rep.alphas], fam)
    j = min(range(len(rep.betas)), key=lambda k: (rep.betas[k], k))
    rep.j, rep.beta = j, rep.betas[j]
    V = _as_clopen(fam.separators[j])
    xi = fam.measures[j]
    rep.xi = xi

    for _, ball in rep.alphas:
        if ball in rep.cert_of_alpha:
            continue
        cert = lemma1_certificate(V, ball, V.granularity, book, context=f"stage={n};alpha={ball}")
        rep.cert_of_alpha[ball] = len(rep.certificates)
        rep.certificates.append(cert)

    inc = [s for s, b in rep.alphas if rep.certificates[rep.cert_of_alpha[b]].bound > threshold]
    rep.inconsistent = inc
    S = ClopenSet.from_atoms(n, inc) & V
    rep.masses = {
        "prec": clopen_measure(xi, prec),
        "null": clopen_measure(xi, null),
        "inconsistent": clopen_measure(xi, S),
        "separator": separator_measure(xi, fam.separators[j]),
        "prec_center": rep.masses["prec_center"],
        "null_center": rep.masses["null_center"],
    }
    ub = succ_upper_bound(rep)
    if ub < target:
        rep.verdict = "stage-witness"
        rep.witness_ball = witness_ball(xi, S, ub, target)
    else:
        rep.verdict = "no-witness"
        rep.reason = "certified inconsistency too small for the target"
    return rep


@dataclass(frozen=True)
class _Const(PrecisionSchedule):
    value: Fraction

    def __call__(self, n):
        return self.value

    def spec(self):
        return f"const:{fmt_rat(self.value)}"


def succ_upper_bound(rep: InconsistencyReport, combined: bool = False) -> Fraction:
    inc = rep.masses.get("inconsistent", ZERO)
    if combined:
        return 1 - inc - rep.masses.get("null", ZERO)
    return 1 - inc


def witness_ball(xi: Measure, S: ClopenSet, bound: Fraction, target: Fraction) -> MeasureBall:
    """A ball around ``xi`` on which ``1 - nu(S)`` stays below ``target``.

    For nu within radius r of xi, ``nu(S) > xi(S) - 2^g r`` with g the
    granularity of S, so any r with ``bound + 2^g r < target`` works; the
    largest dyadic such r is returned.
    """
    gap = target - bound
    g = S.granularity
    k = 0
    while pow2(g - k) >= gap:
        k += 1
    return MeasureBall(xi, pow2(-k))


# amplification ---------------------------------------------------------


@dataclass
class AmplifyParams:
    stages: int = 1
    budget: int = 64
    s_override: int | None = None
    d: int = DEFAULT_D
    threshold: int | None = None
    target: Fraction | None = None
    samples: int = 5

    def to_json(self):
        return {"stages": self.stages, "budget": self.budget, "s_override": self.s_override, "d": self.d,
                "threshold": self.threshold,
                "target": None if self.target is None else fmt_rat(self.target), "samples": self.samples}


@dataclass
class AmplifyOutcome:
    branch: str  # null-amplified | stage-witness | inconclusive
    N: int
    eta: Fraction
    ball: MeasureBall
    stages: list  # InconsistencyReport per tested stage
    new_ball: MeasureBall | None = None
    new_N: int | None = None
    new_learner: Learner | None = None
    new_eta: Fraction | None = None
    null_check: list = field(default_factory=list)  # (stage, nu spec, nu(PREC), nu(NULL(A')))
    intersection_null: list = field(default_factory=list)  # (nu spec, nu(cap_n NULL(A', n)))
    reason: str = ""

    @property
    def report(self):
        return self.stages[-1] if self.stages else None

    def to_json(self) -> dict:
        d = {"branch": self.branch, "N": self.N, "eta": fmt_rat(self.eta), "ball": self.ball.to_json(),
             "reason": self.reason, "stages": [r.to_json() for r in self.stages]}
        if self.branch == "null-amplified":
            d.update({
                "new_ball": self.new_ball.to_json(), "new_N": self.new_N,
                "new_learner": self.new_learner.spec(), "new_eta": fmt_rat(self.new_eta),
                "null_check": [{"stage": n, "nu": s, "prec": fmt_rat(p), "null_wrapped": fmt_rat(q)}
                               for n, s, p, q in self.null_check],
                "intersection_null": [{"nu": s, "mass": fmt_rat(q)} for s, q in self.intersection_null],
            })
        if self.branch == "stage-witness":
            rep = self.report
            d["succ_upper_bound"] = fmt_rat(succ_upper_bound(rep))
            d["witness_ball"] = rep.witness_ball.to_json()
        return d


def sample_members(F: MeasureFamily, B: MeasureBall, k: int) -> list[Measure]:
    """The center of ``B`` plus up to ``k`` evenly spaced members certified inside it."""
    out = [B.center]
    iv = F.params_in_ball(B) if B.radius > 0 else None
    if iv is not None and k > 1:
        lo, hi = iv
        for i in range(k):
            m = F.member(lo + (hi - lo) * Fraction(i, k - 1))
            if m not in out and ball_inside(B, MeasureBall(m, ZERO, closed=True), F):
                out.append(m)
    return out


def amplify(A: Learner, F, B: MeasureBall, N: int, eta, delta, params: AmplifyParams | None = None,
            book: Codebook | None = None) -> AmplifyOutcome:
    F = parse_family(F)
    eta, delta = parse_rat(eta), parse_rat(delta)
    params = params or AmplifyParams()
    book = book if book is not None else Codebook()
    out = AmplifyOutcome("inconclusive", N, eta, B, [])
    if params.budget <= 0 or params.stages <= 0:
        out.reason = "zero budget"
        return out
    for n in range(N + 1, N + params.stages + 1):
        sched = build_schedule(F, delta, n, B, params.s_override, params.d)
        rep = find_inconsistency(A, F, sched, eta, delta, book, params.budget, params.threshold, params.target)
        out.stages.append(rep)
        if rep.verdict == "stage-witness":
            out.branch = "stage-witness"
            return out
        if rep.verdict == "no-witness":
            out.reason = f"stage {n}: precision-dense but inconsistency not certified"
            return out

    f = AdversarySchedule(F, delta, B, params.s_override, params.d)
    wrapped = threshold_wrap(A, f)
    limit = 1 - eta - delta / 2
    tested = range(N + 1, N + params.stages + 1)
    nus = sample_members(F, B, params.samples)
    inter = ClopenSet.full()
    for n in tested:
        prec = prec_set(A, f, n, params.budget)
        nul = null_set(wrapped, n, params.budget)
        inter = inter & nul
        for nu_ in nus:
            p, q = clopen_measure(nu_, prec), clopen_measure(nu_, nul)
            out.null_check.append((n, nu_.spec(), p, q))
            if p > limit:
                out.reason = f"stage {n}: {nu_.spec()} has precision mass {p} > {limit}"
                return out
    out.intersection_null = [(nu_.spec(), clopen_measure(nu_, inter)) for nu_ in nus]
    out.branch = "null-amplified"
    out.new_ball = B
    out.new_N = N + 1
    out.new_learner = wrapped
    out.new_eta = eta + delta / 2
    return out


# diagonalization -------------------------------------------------------


@dataclass
class DiagonalReport:
    delta: Fraction
    rounds: list  # AmplifyOutcome
    verdict: str  # stage-witness | nullity-overflow | inconclusive
    final_ball: MeasureBall
    eta: Fraction
    max_rounds: int
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "delta": fmt_rat(self.delta),
            "max_rounds": self.max_rounds,
            "rounds": [{"round": i + 1, **r.to_json()} for i, r in enumerate(self.rounds)],
            "final_ball": self.final_ball.to_json(),
            "candidate_mu_star": self.final_ball.center.spec(),
            "eta": fmt_rat(self.eta),
            "reason": self.reason,
        }


def max_rounds(delta: Fraction) -> int:
    q = 2 / Fraction(delta)
    return -((-q.numerator) // q.denominator) + 1


def diagonalize(A: Learner, F, delta, B: MeasureBall, N0: int = 0, eta0=ZERO,
                params: AmplifyParams | None = None, book: Codebook | None = None) -> DiagonalReport:
    """Thread (ball, N, eta, learner) through at most ceil(2/delta)+1 amplification rounds."""
    F = parse_family(F)
    delta, eta = parse_rat(delta), parse_rat(eta0)
    params = params or AmplifyParams()
    book = book if book is not None else Codebook()
    limit = max_rounds(delta)
    rep = DiagonalReport(delta, [], "inconclusive", B, eta, limit)
    if params.budget <= 0:
        rep.reason = "zero budget"
        return rep
    ball, N, learner = B, N0, A
    for _ in range(limit):
        out = amplify(learner, F, ball, N, eta, delta, params, book)
        rep.rounds.append(out)
        if out.branch == "stage-witness":
            rep.verdict = "stage-witness"
            rep.final_ball = out.report.witness_ball
            rep.eta = eta
            return rep
        if out.branch == "inconclusive":
            rep.reason = out.reason
            rep.final_ball, rep.eta = ball, eta
            return rep
        ball, N, learner, eta = out.new_ball, out.new_N, out.new_learner, out.new_eta
        rep.final_ball, rep.eta = ball, eta
        if eta > 1 - delta:
            rep.verdict = "nullity-overflow"
            return rep
    rep.reason = "round limit reached"
    return rep
