"""Scenario configuration, report assembly and report validation."""

from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from . import __version__
from .adversary import (
    _as_clopen,
    AmplifyParams,
    amplify,
    build_schedule,
    diagonalize,
    find_inconsistency,
    max_rounds,
    stage_eps,
)
from .clopen import ClopenSet, LAMBDA, all_strings
from .deficiency import LITERAL_C0, header_bits, make_codebook
from .families import parse_family
from .learners import parse_learner
from .measures import MeasureBall, parse_measure
from .orthogonal import parse_separator
from .rational import fmt_rat, parse_rat, pow2
from .sampling import empirical_success

KINDS = ("empirical", "stage", "amplify", "diagonalize")
SCENARIO_DIR = Path(__file__).parent / "scenarios"


class ConfigError(ValueError):
    pass


_RAT_FIELDS = {"delta", "eta0", "target", "tolerance"}
_OPT_INT = {"s_override", "threshold"}


@dataclass
class ExperimentConfig:
    name: str
    kind: str
    learner: str
    family: str = "bernoulli"
    delta: Fraction = Fraction(1, 2)
    base_ball: dict = field(default_factory=lambda: {"center": "bernoulli:p=1/2", "radius": "1/4", "closed": False})
    n: int = 1
    N0: int = 0
    eta0: Fraction = Fraction(0)
    stages: int = 1
    s_override: int | None = None
    d: int = 8
    threshold: int | None = None
    target: Fraction | None = None
    samples: int = 5
    budget: int = 64
    codebook: str = "literal"
    measures: list = field(default_factory=list)
    trials: int = 1
    horizon: int = 1
    criterion: str = "bc-proxy"
    bd_N: int = 10
    tolerance: Fraction = pow2(-20)
    seed: int = 0
    outputs: dict = field(default_factory=dict)

    # (de)serialization ---------------------------------------------------

    def to_json(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in _RAT_FIELDS and v is not None:
                v = fmt_rat(v)
            d[f.name] = v
        return d

    def serialize(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, d: dict, where: str = "<config>") -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError(f"{where}: top level must be an object")
        known = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
        for req in ("name", "kind", "learner"):
            if req not in d:
                raise ConfigError(f"{where}: missing required field {req!r}")
        kw = {}
        for k, v in d.items():
            try:
                if k in _RAT_FIELDS:
                    kw[k] = None if v is None else parse_rat(v)
                elif k in _OPT_INT:
                    kw[k] = None if v is None else int(v)
                elif k in ("n", "N0", "stages", "d", "samples", "budget", "trials", "horizon", "bd_N", "seed"):
                    if isinstance(v, bool) or not isinstance(v, int):
                        raise ValueError("expected an integer")
                    kw[k] = v
                else:
                    kw[k] = v
            except (ValueError, TypeError, ZeroDivisionError) as e:
                raise ConfigError(f"{where}: field {k!r}: {e}") from None
        cfg = cls(**kw)
        cfg.check(where)
        return cfg

    @classmethod
    def parse(cls, text: str, where: str = "<config>") -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{where}: line {e.lineno} column {e.colno}: {e.msg}") from None
        return cls.from_json(d, where)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        p = resolve_config(path)
        return cls.parse(p.read_text(encoding="utf-8"), str(p))

    def check(self, where: str = "<config>"):
        def bad(field_, msg):
            raise ConfigError(f"{where}: field {field_!r}: {msg}")

        if self.kind not in KINDS:
            bad("kind", f"must be one of {KINDS}")
        if not 0 < self.delta <= 1:
            bad("delta", "must lie in (0, 1]")
        if self.criterion not in ("bc-proxy", "bd-proxy"):
            bad("criterion", "must be bc-proxy or bd-proxy")
        if self.seed < 0 or self.seed >= 1 << 64:
            bad("seed", "must be a 64-bit unsigned integer")
        for name in ("learner", "family", "codebook"):
            try:
                {"learner": parse_learner, "family": parse_family, "codebook": make_codebook}[name](getattr(self, name))
            except ValueError as e:
                bad(name, str(e))
        try:
            self.ball()
        except (ValueError, KeyError, TypeError) as e:
            bad("base_ball", str(e))
        for i, m in enumerate(self.measures):
            try:
                parse_measure(m)
            except ValueError as e:
                bad(f"measures[{i}]", str(e))
        if self.kind == "empirical" and not self.measures:
            bad("measures", "empirical scenarios need at least one measure")

    def ball(self) -> MeasureBall:
        return MeasureBall.from_json(self.base_ball)

    def amplify_params(self) -> AmplifyParams:
        return AmplifyParams(self.stages, self.budget, self.s_override, self.d, self.threshold, self.target,
                             self.samples)


def resolve_config(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    for q in (SCENARIO_DIR / p.name, SCENARIO_DIR / f"{p.name}.cfg"):
        if q.exists():
            return q
    raise ConfigError(f"config file not found: {path}")


def bundled_scenarios() -> list[str]:
    return sorted(p.name for p in SCENARIO_DIR.glob("*.cfg"))


def environment_stamp() -> dict:
    return {
        "package": f"artifact {__version__}",
        "python": ".".join(platform.python_version_tuple()[:2]),
        "constants": {"literal_c0": LITERAL_C0, "header_bits": "2*ceil(log2(i+1))+1",
                      "request_slack": "4^n r", "rational_format": "num/den"},
    }


# running ---------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, kind: str | None = None) -> dict:
    """Dispatch on the scenario kind; the result is a JSON-ready report."""
    kind = kind or cfg.kind
    if kind not in KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}")
    report = {
        "scenario": cfg.name,
        "kind": kind,
        "config": cfg.to_json(),
        "environment": environment_stamp(),
    }
    A = parse_learner(cfg.learner)
    if kind == "empirical":
        report.update(_run_empirical(cfg, A))
        return report
    F = parse_family(cfg.family)
    B = cfg.ball()
    book = make_codebook(cfg.codebook)
    if kind == "stage":
        sched = build_schedule(F, cfg.delta, cfg.n, B, cfg.s_override, cfg.d)
        rep = find_inconsistency(A, F, sched, cfg.eta0, cfg.delta, book, cfg.budget, cfg.threshold, cfg.target)
        report.update(rep.to_json())
    elif kind == "amplify":
        out = amplify(A, F, B, cfg.N0, cfg.eta0, cfg.delta, cfg.amplify_params(), book)
        report["verdict"] = out.branch
        report["amplify"] = out.to_json()
    else:
        rep = diagonalize(A, F, cfg.delta, B, cfg.N0, cfg.eta0, cfg.amplify_params(), book)
        report["verdict"] = rep.verdict
        report["diagonal"] = rep.to_json()
    report["codebook"] = book.to_json()
    return report


def _run_empirical(cfg: ExperimentConfig, A) -> dict:
    rows = []
    for spec in cfg.measures:
        mu = parse_measure(spec)
        res = empirical_success(A, mu, cfg.trials, cfg.horizon, cfg.criterion, N=cfg.bd_N, seed=cfg.seed,
                                budget=cfg.budget, tolerance=cfg.tolerance, detail=True)
        rows.append({
            "measure": mu.spec(),
            "success": fmt_rat(res.fraction),
            "success_decimal": float(res.fraction),
            "trials": res.trials,
            "window": list(res.window),
            "samples": [{"prefix": p, "ok": ok} for p, ok in res.per_trial],
        })
    return {"verdict": "ok", "criterion": cfg.criterion, "results": rows}


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# validation ------------------------------------------------------------


class _Checker:
    def __init__(self):
        self.problems: list[str] = []

    def need(self, cond, msg):
        if not cond:
            self.problems.append(msg)


def _rat(x):
    return parse_rat(x)


def _num(x):
    return math.inf if x == "inf" else x


def check_stage(st: dict, cfg: ExperimentConfig, base: MeasureBall, eta, chk: _Checker, where: str):
    sch = st["schedule"]
    n, s, L = sch["n"], sch["s"], sch["L"]
    f = _rat(sch["f"])
    chk.need(f == pow2(-L - s), f"{where}: f(n) != 2^-(L+s)")
    chk.need(_rat(sch["eps"]) == stage_eps(n, cfg.delta, base), f"{where}: eps mismatch")
    chk.need(_rat(st["eta"]) == eta, f"{where}: eta mismatch")
    m = {k: _rat(v) for k, v in st["masses"].items()}
    for k, v in m.items():
        chk.need(0 <= v <= 1, f"{where}: mass {k} outside [0, 1]")
    chk.need(m.get("prec_center", 0) + m.get("null_center", 0) <= 1, f"{where}: prec + null > 1 (center)")
    prec, null = ClopenSet.parse(st["prec_set"]), ClopenSet.parse(st["null_set"])
    chk.need(prec.isdisjoint(null), f"{where}: PREC and NULL intersect")
    if "family" not in st:
        chk.need(st["verdict"] == "precision-sparse", f"{where}: non-sparse verdict without a family")
        return

    chk.need(m["prec"] + m["null"] <= 1, f"{where}: prec + null > 1")
    chk.need(m["inconsistent"] <= m["prec"], f"{where}: inconsistent mass exceeds prec mass")
    fam_j = st["family"]
    delta = cfg.delta
    chk.need(fam_j["s"] == s, f"{where}: family s mismatch")
    chk.need(fam_j["M"] <= L, f"{where}: separator granularity above L")
    for g in fam_j["guarantees"]:
        chk.need(_rat(g) >= 1 - delta / 8, f"{where}: guarantee {g} below 1 - delta/8")

    # rebuild the orthogonal family: disjointness, guarantees, members
    F = parse_family(cfg.family)
    D = MeasureBall(parse_measure(st["covering"]["center"]), _rat(st["covering"]["radius"]),
                    st["covering"]["closed"])
    fam = F.orthogonal_family(D, s, delta)
    chk.need(fam.verify(), f"{where}: orthogonal family fails re-verification")
    chk.need([x.spec() for x in fam.measures] == fam_j["params"], f"{where}: family members mismatch")
    chk.need([fmt_rat(g) for g in fam.guarantees] == fam_j["guarantees"], f"{where}: guarantees mismatch")

    # pigeonhole
    ph = st["pigeonhole"]
    beta = _rat(ph["beta"])
    betas = [_rat(b) for b in ph["betas"]]
    t = ph["t"]
    chk.need(beta <= pow2(-s), f"{where}: beta(V_j) = {beta} exceeds 2^-s")
    chk.need(t == len(st["alphas"]) and 1 <= t <= 2**n, f"{where}: t out of range")
    chk.need(len(betas) == 2**s and sum(betas) <= 1, f"{where}: separator averages inconsistent")
    chk.need(0 <= ph["j"] < len(betas) and betas[ph["j"]] == beta and beta == min(betas),
             f"{where}: j is not the first minimiser")
    for a in st["alphas"]:
        chk.need(_rat(a["radius"]) < f, f"{where}: alpha on {a['sigma']} not below f(n)")
        chk.need(a["sigma"] in prec, f"{where}: alpha string outside PREC")

    # certificates
    hdr_seen = []
    for c in st["certificates"]:
        ws = [a["weight"] for a in c["atoms"] if a["weight"] is not None]
        ks = sum((pow2(-w) for w in ws), Fraction(0))
        chk.need(ks == _rat(c["kraft_sum"]) and ks <= 1, f"{where}: certificate Kraft sum mismatch")
        bound, mm = _num(c["bound"]), _num(c["m"])
        if mm != math.inf:
            chk.need(c["header_bits"] == header_bits(c["registration"]), f"{where}: header bits mismatch")
            chk.need(bound == mm - c["header_bits"] - c["rounding_loss"], f"{where}: bound formula mismatch")
            hdr_seen.append(c["registration"])
        for a in c["atoms"]:
            chk.need(_num(a["ed_hat"]) >= bound, f"{where}: atom {a['sigma']} below certified bound")
    chk.need(len(set(hdr_seen)) == len(hdr_seen), f"{where}: duplicate registration index")
    cert_bounds = [_num(c["bound"]) for c in st["certificates"]]
    labelled = set(st["inconsistent"])
    for a in st["alphas"]:
        b = cert_bounds[a["certificate"]]
        chk.need((b > st["threshold"]) == (a["sigma"] in labelled),
                 f"{where}: inconsistency label of {a['sigma']} disagrees with its certificate")
    ub = _rat(st["succ_upper_bound"])
    chk.need(ub == 1 - m["inconsistent"], f"{where}: succ bound != 1 - inconsistent")
    chk.need(_rat(st["succ_upper_bound_with_null"]) == 1 - m["inconsistent"] - m["null"],
             f"{where}: combined bound mismatch")
    witness = ub < _rat(st["target"])
    chk.need((st["verdict"] == "stage-witness") == witness, f"{where}: verdict inconsistent with the bound")
    if witness:
        wb = st["witness_ball"]
        V = _as_clopen(parse_separator(fam_j["separators"][ph["j"]]))
        S = ClopenSet.from_atoms(n, st["inconsistent"]) & V
        chk.need(wb["center"] == st["xi"], f"{where}: witness ball not centred on xi")
        chk.need(ub + pow2(S.granularity) * _rat(wb["radius"]) < _rat(st["target"]),
                 f"{where}: witness radius too large for the target")


def check_amplify(out: dict, cfg, base, eta, chk, where):
    for i, st in enumerate(out["stages"]):
        check_stage(st, cfg, base, eta, chk, f"{where}.stages[{i}]")
    if out["branch"] == "null-amplified":
        lim = 1 - eta - cfg.delta / 2
        for row in out["null_check"]:
            chk.need(_rat(row["prec"]) <= lim, f"{where}: sampled precision mass above 1 - eta - delta/2")
            chk.need(_rat(row["null_wrapped"]) >= eta + cfg.delta / 2, f"{where}: null mass below eta + delta/2")
        chk.need(_rat(out["new_eta"]) == eta + cfg.delta / 2, f"{where}: eta' != eta + delta/2")
        chk.need(out["new_N"] >= out["N"], f"{where}: N' < N")
    elif out["branch"] == "stage-witness":
        chk.need(out["stages"] and out["stages"][-1]["verdict"] == "stage-witness", f"{where}: witness missing")


def validate_report_detail(report: dict, rederive: bool = True) -> tuple[bool, list[str]]:
    chk = _Checker()
    try:
        for k in ("scenario", "kind", "config", "verdict"):
            chk.need(k in report, f"missing field {k!r}")
        if chk.problems:
            return False, chk.problems
        cfg = ExperimentConfig.from_json(report["config"], "config")
        base = cfg.ball()
        kind = report["kind"]
        if "codebook" in report:
            chk.need(_rat(report["codebook"]["kraft_bound"]) <= 1, "codebook Kraft bound exceeds 1")
        if kind == "stage":
            check_stage(report, cfg, base, cfg.eta0, chk, "stage")
        elif kind == "amplify":
            out = report["amplify"]
            chk.need(report["verdict"] == out["branch"], "verdict != branch")
            check_amplify(out, cfg, base, cfg.eta0, chk, "amplify")
        elif kind == "diagonalize":
            dg = report["diagonal"]
            chk.need(len(dg["rounds"]) <= max_rounds(cfg.delta), "too many rounds")
            eta = cfg.eta0
            for i, r in enumerate(dg["rounds"]):
                chk.need(_rat(r["eta"]) == eta, f"round {i + 1}: eta not threaded")
                check_amplify(r, cfg, MeasureBall.from_json(r["ball"]), eta, chk, f"round {i + 1}")
                if r["branch"] == "null-amplified":
                    eta = _rat(r["new_eta"])
            if dg["verdict"] == "nullity-overflow":
                chk.need(_rat(dg["eta"]) > 1 - cfg.delta, "overflow claimed without eta > 1 - delta")
            if dg["verdict"] == "stage-witness":
                chk.need(dg["rounds"] and dg["rounds"][-1]["branch"] == "stage-witness", "witness round missing")
        elif kind == "empirical":
            for row in report["results"]:
                chk.need(0 <= _rat(row["success"]) <= 1, "success fraction outside [0, 1]")
        else:
            chk.need(False, f"unknown kind {kind!r}")
        if rederive and not chk.problems:
            fresh = run_experiment(cfg, kind)
            body = {k: v for k, v in report.items() if k not in ("validation", "environment")}
            fresh_body = {k: v for k, v in fresh.items() if k != "environment"}
            chk.need(json.loads(json.dumps(body)) == json.loads(json.dumps(fresh_body)),
                     "re-derivation from the echoed config does not reproduce the report")
    except Exception as e:  # schema violations surface here
        chk.need(False, f"schema violation: {type(e).__name__}: {e}")
    return not chk.problems, chk.problems


def validate_report(report: dict, rederive: bool = True) -> bool:
    return validate_report_detail(report, rederive)[0]


# CSV trace -------------------------------------------------------------


CSV_COLUMNS = ("stage", "sigma", "emitted_radius", "ed_hat", "label")


def stage_rows(st: dict) -> list[dict]:
    n = st["stage"]
    prec, null = ClopenSet.parse(st["prec_set"]), ClopenSet.parse(st["null_set"])
    alphas = {a["sigma"]: a for a in st.get("alphas", [])}
    inc = set(st.get("inconsistent", []))
    certs = st.get("certificates", [])
    rows = []
    for sigma in all_strings(n):
        a = alphas.get(sigma)
        ed = ""
        if a is not None:
            ext = [_num(x["ed_hat"]) for x in certs[a["certificate"]]["atoms"] if x["sigma"].startswith(sigma)
                   or sigma.startswith(x["sigma"])]
            ed = min(ext) if ext else ""
            ed = "inf" if ed == math.inf else ed
        if sigma in inc:
            label = "inconsistent"
        elif sigma in prec:
            label = "precise"
        elif sigma in null:
            label = "null"
        else:
            label = "imprecise"
        rows.append({"stage": n, "sigma": sigma or LAMBDA, "emitted_radius": a["radius"] if a else "",
                     "ed_hat": ed, "label": label})
    return rows


def report_rows(report: dict) -> list[dict]:
    kind = report["kind"]
    if kind == "stage":
        return stage_rows(report)
    if kind == "amplify":
        return [r for st in report["amplify"]["stages"] for r in stage_rows(st)]
    if kind == "diagonalize":
        return [r for rd in report["diagonal"]["rounds"] for st in rd["stages"] for r in stage_rows(st)]
    rows = []
    for res in report["results"]:
        for smp in res["samples"]:
            rows.append({"stage": res["window"][1], "sigma": smp["prefix"], "emitted_radius": "",
                         "ed_hat": "", "label": f"{res['measure']}:{'success' if smp['ok'] else 'failure'}"})
    return rows


def write_csv(report: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in report_rows(report):
            w.writerow(r)


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
