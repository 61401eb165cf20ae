"""Exact sampling from bundled measures and empirical success of learners."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .deficiency import Codebook, d_hat, make_codebook
from .families import MixtureFamily
from .learners import Learner, run_learner
from .measures import Measure, MeasureBall, PointMixture
from .rational import pow2


class SamplingError(RuntimeError):
    pass


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic 64-bit child seed; trials use ``derive_seed(seed, trial)``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(seed).to_bytes(8, "little", signed=False))
    for p in path:
        h.update(int(p).to_bytes(8, "little", signed=False))
    return int.from_bytes(h.digest(), "little")


class BitSource:
    """Uniform random bits drawn 64 at a time from a seeded generator."""

    def __init__(self, seed: int):
        self._rng = random.Random(seed)
        self._buf = 0
        self._left = 0
        self.consumed = 0

    def bit(self) -> int:
        if self._left == 0:
            self._buf = self._rng.getrandbits(64)
            self._left = 64
        self._left -= 1
        self.consumed += 1
        return (self._buf >> self._left) & 1


def bernoulli_bit(q: Fraction, src: BitSource) -> int:
    """1 with probability exactly ``q``: compare a lazily refined uniform with ``q``."""
    if q <= 0:
        return 0
    if q >= 1:
        return 1
    num, den = q.numerator, q.denominator
    a, k = 0, 0  # U lies in [a/2^k, (a+1)/2^k)
    while True:
        a = 2 * a + src.bit()
        k += 1
        scaled = num << k
        if (a + 1) * den <= scaled:
            return 1
        if a * den >= scaled:
            return 0


@dataclass
class Sample:
    bits: str
    generator_bits: list = field(default_factory=list)  # consumed per emitted bit


def sample_with_transcript(mu: Measure, n: int, seed: int) -> Sample:
    src = BitSource(seed)
    out, used = [], []
    state = mu.initial()
    for _ in range(n):
        before = src.consumed
        b = bernoulli_bit(mu.p_one(state), src)
        out.append("1" if b else "0")
        used.append(src.consumed - before)
        state = mu.advance(state, b)
    return Sample("".join(out), used)


def sample_sequence(mu: Measure, n: int, seed: int) -> str:
    return sample_with_transcript(mu, n, seed).bits


def explanations(mu: Measure) -> tuple:
    if isinstance(mu, PointMixture):
        return MixtureFamily().explanations(mu)
    return (mu,)


def _ball_holds(ball: MeasureBall, target: Measure) -> bool:
    if ball.radius == 0:
        return ball.center == target
    return ball.contains(target, 16) == "in"


@dataclass
class SuccessResult:
    successes: int
    trials: int
    criterion: str
    horizon: int
    window: tuple
    per_trial: list = field(default_factory=list)  # (prefix, ok)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.successes, self.trials)


def empirical_success(
    A: Learner,
    mu: Measure,
    trials: int,
    horizon: int,
    criterion: str = "bc-proxy",
    *,
    N: int = 10,
    seed: int = 0,
    budget: int = 1 << 16,
    tolerance: Fraction = pow2(-20),
    book: Codebook | None = None,
    detail: bool = False,
) -> SuccessResult:
    """Fraction of sampled sequences on which ``A`` succeeds over the stage window.

    Success is checked on every stage in ``[max(1, horizon // 2), horizon]``:

    * ``bc-proxy``: every stage emits balls that all contain one fixed
      explanation of the source (certified; spec equality at radius 0) and
      the last ball has radius below ``tolerance``;
    * ``bd-proxy``: every stage emits a ball and ``d_hat`` of the prefix
      against the emitted center is at most ``N``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if criterion not in ("bc-proxy", "bd-proxy"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if criterion == "bd-proxy" and book is None:
        book = make_codebook("runlength")
    lo = max(1, horizon // 2)
    res = SuccessResult(0, trials, criterion, horizon, (lo, horizon))
    for t in range(trials):
        X = sample_sequence(mu, horizon, derive_seed(seed, t))
        if criterion == "bc-proxy":
            ok = _bc_trial(A, mu, X, lo, horizon, budget, tolerance)
        else:
            ok = _bd_trial(A, X, lo, horizon, budget, N, book)
        res.successes += ok
        if detail:
            res.per_trial.append((X[:64], ok))
    return res


def _bc_trial(A, mu, X, lo, hi, budget, tol) -> bool:
    live = [e for e in explanations(mu) if e.cylinder_prob(X) > 0]
    for n in range(lo, hi + 1):
        tr = run_learner(A, X[:n], budget)
        if not tr.emitted or tr.balls[-1].radius >= tol:
            return False
        live = [e for e in live if all(_ball_holds(b, e) for b in tr.balls)]
        if not live:
            return False
    return True


def _bd_trial(A, X, lo, hi, budget, N, book) -> bool:
    # d_hat is monotone in n for a fixed center, so each run of equal
    # centers is checked at its last stage only
    prev, prev_n = None, None
    for n in range(lo, hi + 1):
        tr = run_learner(A, X[:n], budget)
        if not tr.emitted:
            return False
        c = tr.balls[-1].center
        if prev is not None and c != prev:
            if d_hat(X[:prev_n], prev, book) > N:
                return False
        prev, prev_n = c, n
    return d_hat(X[:prev_n], prev, book) <= N
