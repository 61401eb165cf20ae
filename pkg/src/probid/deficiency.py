"""Explicit prefix-free codebooks and the deficiency surrogates built on them.

``k_hat`` is an upper bound on prefix-free complexity realized by an actual
prefix-free code: a literal fallback for every string plus codes assigned to
registered request sets. Every bound reported here is about ``k_hat`` itself;
the true complexity satisfies ``K(x) <= k_hat(x) + c`` for a machine constant
``c`` that never enters a computation.

Code layout (all codewords are bit strings):

* literal: ``0000000`` + ``1^l 0`` + ``n`` in ``l`` bits + ``x`` with ``n = |x|``,
  ``l = ceil(log2(n+1))``, so ``k_lit(x) = |x| + 2*ceil(log2(|x|+1)) + 8``;
* registration ``i >= 1``: header ``1^l 0`` + ``i`` in ``l`` bits with
  ``l = ceil(log2(i+1))`` (``2l + 1`` bits), followed by a canonical
  prefix code for the request set, one codeword of each request's weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .clopen import ClopenSet, check_bits
from .measures import Measure, MeasureBall, clopen_measure, parse_measure
from .rational import ONE, ZERO, fmt_rat, log2_ceil_int, neg_log2_ceil, neg_log2_floor, parse_rat, pow2

LITERAL_C0 = 8
LITERAL_PREFIX = "0000000"


class KraftViolation(AssertionError):
    pass


class CertificateError(ValueError):
    pass


# request sets ----------------------------------------------------------


@dataclass(frozen=True)
class RequestSet:
    requests: tuple  # ((target, weight), ...)

    def __post_init__(self):
        reqs = tuple((check_bits(t), int(w)) for t, w in self.requests)
        if any(w < 0 for _, w in reqs):
            raise KraftViolation("negative request weight")
        object.__setattr__(self, "requests", reqs)

    def __len__(self):
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)

    def to_json(self):
        return [{"target": t, "weight": w} for t, w in self.requests]


def kraft_sum(R: RequestSet | Iterable) -> Fraction:
    reqs = R.requests if isinstance(R, RequestSet) else R
    return sum((pow2(-w) for _, w in reqs), ZERO)


def lemma1_m(mu_C: Fraction, r: Fraction, n: int, slack_base: int = 4):
    """``floor(-log2(mu(C) + slack_base**n * r))``; ``inf`` when the argument is 0."""
    return neg_log2_floor(mu_C + slack_base**n * r)


def request_set_for_clopen(C: ClopenSet, mu: Measure, r, n: int) -> RequestSet:
    r = parse_rat(r)
    if C.granularity > n:
        raise CertificateError(f"granularity {C.granularity} exceeds n = {n}")
    if C.is_empty:
        return RequestSet(())
    m = lemma1_m(clopen_measure(mu, C), r, n)
    if m == math.inf:
        raise CertificateError("m is undefined: mu(C) + 4^n r = 0")
    reqs = []
    for sigma in C.atoms():
        x = mu.cylinder_prob(sigma) + pow2(len(sigma)) * r
        if x == 0:
            continue  # a null atom needs no code; its deficiency is infinite
        reqs.append((sigma, neg_log2_ceil(x) - m))
    R = RequestSet(tuple(reqs))
    if kraft_sum(R) > 1:
        raise KraftViolation(f"request set Kraft sum {kraft_sum(R)} > 1")
    return R


def run_length_request_set(kmax: int = 4096) -> RequestSet:
    """``0^k`` and ``1^k`` at weight ``2*ceil(log2(k+1)) + 1``; the limit Kraft sum is 1."""
    reqs = [("", 1)]
    for k in range(1, kmax + 1):
        w = 2 * log2_ceil_int(k + 1) + 1
        reqs.append(("0" * k, w))
        reqs.append(("1" * k, w))
    return RequestSet(tuple(reqs))


# codebook --------------------------------------------------------------


def self_delimiting(n: int) -> str:
    l = log2_ceil_int(n + 1)
    return "1" * l + "0" + (format(n, f"0{l}b") if l else "")


def header_code(i: int) -> str:
    if i < 1:
        raise ValueError("registration indices start at 1")
    return self_delimiting(i)


def header_bits(i: int) -> int:
    return 2 * log2_ceil_int(i + 1) + 1


def literal_cost(n: int) -> int:
    return n + 2 * log2_ceil_int(n + 1) + LITERAL_C0


def literal_code(sigma: str) -> str:
    return LITERAL_PREFIX + self_delimiting(len(sigma)) + sigma


def canonical_codes(weights: list[int]) -> list[str]:
    """Canonical prefix code: codeword ``k`` has length ``weights[k]``, given Kraft <= 1."""
    order = sorted(range(len(weights)), key=lambda k: (weights[k], k))
    out = [""] * len(weights)
    c, prev = 0, 0
    for k in order:
        w = weights[k]
        c <<= w - prev
        if c >= 1 << w:
            raise KraftViolation("Kraft inequality violated during code assignment")
        out[k] = format(c, f"0{w}b") if w else ""
        c += 1
        prev = w
    return out


@dataclass(frozen=True)
class Registration:
    index: int
    header: str
    requests: RequestSet
    context: str
    codes: tuple  # codeword per request, without the header

    @property
    def header_bits(self) -> int:
        return len(self.header)


class Codebook:
    """Literal fallback plus registered request sets, with a trie index for ``k_hat``."""

    def __init__(self):
        self.registrations: list[Registration] = []
        self._child: dict = {}  # (node, bit) -> node
        self._best: dict = {}  # node -> cheapest registered cost
        self._nodes = 1  # node 0 is the root (the empty string)
        self._decode: dict = {}
        self._node_of: dict = {}

    def copy(self) -> "Codebook":
        b = Codebook()
        b.registrations = list(self.registrations)
        b._child = dict(self._child)
        b._best = dict(self._best)
        b._nodes = self._nodes
        b._decode = dict(self._decode)
        b._node_of = dict(self._node_of)
        return b

    @property
    def next_index(self) -> int:
        return len(self.registrations) + 1

    def register_inplace(self, R: RequestSet, context: str = "") -> Registration:
        if kraft_sum(R) > 1:
            raise KraftViolation("cannot register a request set with Kraft sum > 1")
        i = self.next_index
        head = header_code(i)
        codes = tuple(canonical_codes([w for _, w in R.requests]))
        reg = Registration(i, head, R, context, codes)
        self.registrations.append(reg)
        for (target, _), code in zip(R.requests, codes):
            cost = len(head) + len(code)
            node = self._node_for(target)
            if cost < self._best.get(node, math.inf):
                self._best[node] = cost
            self._decode[head + code] = target
        return reg

    def _node_for(self, target: str) -> int:
        # extend from the longest cached prefix; run-length targets share one spine
        hit = self._node_of.get(target)
        if hit is not None:
            return hit
        parent = self._node_of.get(target[:-1]) if target else None
        node, rest = (parent, target[-1:]) if parent is not None else (0, target)
        for c in rest:
            nxt = self._child.get((node, c))
            if nxt is None:
                nxt = self._nodes
                self._nodes += 1
                self._child[(node, c)] = nxt
            node = nxt
        self._node_of[target] = node
        return node

    def registered_costs(self, sigma: str) -> list:
        """Best registered cost for each prefix ``sigma[:k]``, ``inf`` where none."""
        out = [self._best.get(0, math.inf)]
        node = 0
        for c in sigma:
            node = self._child.get((node, c)) if node is not None else None
            out.append(math.inf if node is None else self._best.get(node, math.inf))
        return out

    def k_hat(self, sigma: str) -> int:
        check_bits(sigma)
        return min(literal_cost(len(sigma)), self.registered_costs(sigma)[-1])

    def prefix_k_hats(self, sigma: str) -> list[int]:
        return [min(literal_cost(k), c) for k, c in enumerate(self.registered_costs(sigma))]

    def decode(self, code: str) -> str:
        if code.startswith(LITERAL_PREFIX):
            rest = code[len(LITERAL_PREFIX):]
            l = rest.index("0")
            n = int(rest[l + 1: 2 * l + 1], 2) if l else 0
            body = rest[2 * l + 1:]
            if len(body) != n:
                raise ValueError("literal code has the wrong length")
            return body
        if code in self._decode:
            return self._decode[code]
        raise ValueError(f"not a codeword: {code!r}")

    def emitted_codes(self) -> list[str]:
        return sorted(self._decode)

    def kraft_bound(self) -> Fraction:
        """Upper bound on the Kraft sum of every codeword this book can emit."""
        return pow2(-len(LITERAL_PREFIX)) + sum(
            (pow2(-r.header_bits) * kraft_sum(r.requests) for r in self.registrations), ZERO)

    def to_json(self) -> dict:
        return {
            "literal_c0": LITERAL_C0,
            "header": "2*ceil(log2(i+1))+1",
            "registrations": [{"index": r.index, "context": r.context, "size": len(r.requests),
                               "kraft_sum": fmt_rat(kraft_sum(r.requests))} for r in self.registrations],
            "kraft_bound": fmt_rat(self.kraft_bound()),
        }


def register(book: Codebook, R: RequestSet, context: str = "") -> Codebook:
    """Functional registration: a new book, the argument is left unchanged."""
    out = book.copy()
    out.register_inplace(R, context)
    return out


def k_hat(book: Codebook, sigma: str) -> int:
    return book.k_hat(sigma)


def make_codebook(spec: str = "literal") -> Codebook:
    """``literal`` (fallback only) or ``runlength[:kmax=N]``."""
    kind, _, body = spec.partition(":")
    book = Codebook()
    if kind == "literal":
        return book
    if kind == "runlength":
        kw = dict(p.split("=", 1) for p in body.split(";") if p)
        return _runlength_book(int(kw.get("kmax", 4096))).copy()
    raise ValueError(f"unknown codebook spec {spec!r}")


@lru_cache(maxsize=8)
def _runlength_book(kmax: int) -> Codebook:
    book = Codebook()
    book.register_inplace(run_length_request_set(kmax), "runlength")
    return book


def is_prefix_free(codes: Iterable[str]) -> bool:
    """Sorted-neighbour check: in lexicographic order a prefix sits right before an extension."""
    codes = list(codes)
    s = sorted(set(codes))
    if len(s) != len(codes):
        return False
    return all(not b.startswith(a) for a, b in zip(s, s[1:]))


# deficiency surrogates -------------------------------------------------


def ed_terms(sigma: str, ball: MeasureBall, book: Codebook) -> list:
    """``floor(-log2(mu(sigma[:k]) + 2^k r)) - k_hat(sigma[:k])`` for k = 0..|sigma|."""
    check_bits(sigma)
    mu, r = ball.center, ball.radius
    ks = book.prefix_k_hats(sigma)
    out = []
    state, prob = mu.initial(), ONE
    for k in range(len(sigma) + 1):
        out.append(neg_log2_floor(prob + pow2(k) * r) - ks[k])
        if k < len(sigma):
            if prob:
                q = mu.p_one(state)
                bit = sigma[k] == "1"
                prob *= q if bit else 1 - q
                state = mu.advance(state, int(bit))
    return out


def ed_hat(sigma: str, ball: MeasureBall, book: Codebook):
    return max(ed_terms(sigma, ball, book))


def d_hat(sigma: str, mu: Measure, book: Codebook):
    return ed_hat(sigma, MeasureBall(mu, ZERO, closed=True), book)


# deficiency certificates ---------------------------------------------


@dataclass
class Certificate:
    clopen: ClopenSet
    ball: MeasureBall
    n: int
    m: int
    m_unsound: object  # same formula with total slack 2^n r
    registration: int
    header_bits: int
    requests: RequestSet
    bound: int
    rounding_loss: int
    atoms: list = field(default_factory=list)  # (sigma, weight, ed_hat)
    context: str = ""

    @property
    def kraft(self) -> Fraction:
        return kraft_sum(self.requests)

    def to_json(self, include_clopen: bool = True) -> dict:
        d = {
            "context": self.context,
            "n": self.n,
            "ball": self.ball.to_json(),
            "m": _jnum(self.m),
            "m_single_slack": _jnum(self.m_unsound),
            "registration": self.registration,
            "header_bits": self.header_bits,
            "rounding_loss": self.rounding_loss,
            "bound": _jnum(self.bound),
            "atoms": [{"sigma": s, "weight": w, "ed_hat": _jnum(e)} for s, w, e in self.atoms],
            "kraft_sum": fmt_rat(self.kraft),
        }
        if include_clopen:
            d["clopen"] = self.clopen.serialize()
        return d


def _jnum(x):
    return "inf" if x == math.inf else x


def lemma1_certificate(C: ClopenSet, B: MeasureBall, n: int, book: Codebook, context: str = "") -> Certificate:
    """Register the request set of ``C`` against ``B`` and verify the per-atom bound.

    With ``x_s = -log2(mu(s) + 2^|s| r)`` an atom ``s`` receives code length
    ``header + ceil(x_s) - m``, so its own term in ``ed_hat`` is at least
    ``m - header - (ceil(x_s) - floor(x_s))``. The certified bound therefore
    loses one bit whenever some ``x_s`` is not an integer. ``book`` is
    updated in place.
    """
    if C.is_empty:
        raise CertificateError("cannot certify the empty set")
    mu, r = B.center, B.radius
    muC = clopen_measure(mu, C)
    m = lemma1_m(muC, r, n)
    if m == math.inf:
        # B is a single measure giving C mass 0: every atom is infinitely deficient
        atoms = [(sigma, None, ed_hat(sigma, B, book)) for sigma in C.atoms()]
        if any(e != math.inf for _, _, e in atoms):
            raise KraftViolation("null clopen set with a finite deficiency")
        return Certificate(C, B, n, m, m, 0, 0, RequestSet(()), m, 0, atoms, context)
    R = request_set_for_clopen(C, mu, r, n)
    m_unsound = lemma1_m(muC, r, n, slack_base=2) if n else m
    reg = book.register_inplace(R, context)
    loss = 0
    for sigma, _ in R.requests:
        x = mu.cylinder_prob(sigma) + pow2(len(sigma)) * r
        if neg_log2_ceil(x) != neg_log2_floor(x):
            loss = 1
            break
    bound = m - reg.header_bits - loss
    weights = dict(R.requests)
    atoms = []
    for sigma in C.atoms():
        e = ed_hat(sigma, B, book)
        if e < bound:
            raise KraftViolation(f"certificate failed on atom {sigma!r}: {e} < {bound}")
        atoms.append((sigma, weights.get(sigma), e))
    return Certificate(C, B, n, m, m_unsound, reg.index, reg.header_bits, R, bound, loss, atoms, context)


def certificate_from_json(d: dict) -> dict:
    """Parsed numeric fields of a certificate record (validator helper)."""
    return {
        "ball": MeasureBall.from_json(d["ball"]),
        "clopen": ClopenSet.parse(d["clopen"]) if "clopen" in d else None,
        "kraft_sum": parse_rat(d["kraft_sum"]),
        "center": parse_measure(d["ball"]["center"]),
    }
