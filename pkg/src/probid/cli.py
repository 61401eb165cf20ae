"""Command-line front end: ``probid <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import (
    ConfigError,
    ExperimentConfig,
    bundled_scenarios,
    dump_report,
    run_experiment,
    validate_report_detail,
    write_csv,
)
from .families import FamilyError, family_list
from .learners import LearnerError, parse_learner, run_learner
from .measures import parse_measure, rho_interval
from .orthogonal import HypothesisViolation
from .rational import fmt_rat
from .sampling import sample_with_transcript

EXIT_OK, EXIT_INVALID, EXIT_HYPOTHESIS, EXIT_INCONCLUSIVE = 0, 2, 3, 4

_INCONCLUSIVE = {"inconclusive", "no-witness"}


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False))


def cmd_family(args):
    for row in family_list():
        print(f"{row['name']:<18} kappa={row['kappa']:<6} {row['description']}")
    return EXIT_OK


def cmd_measure(args):
    mu = parse_measure(args.spec)
    p = mu.cylinder_prob(args.sigma)
    _print_json({"measure": mu.spec(), "sigma": args.sigma, "probability": fmt_rat(p)})
    return EXIT_OK


def cmd_rho(args):
    a, b = parse_measure(args.a), parse_measure(args.b)
    iv = rho_interval(a, b, args.M)
    _print_json({"a": a.spec(), "b": b.spec(), "M": args.M, "interval": iv.to_json(), "width": fmt_rat(iv.width)})
    return EXIT_OK


def cmd_learner(args):
    tr = run_learner(parse_learner(args.spec), args.input, args.budget)
    _print_json({"learner": args.spec, **tr.to_json()})
    return EXIT_OK


def cmd_sample(args):
    smp = sample_with_transcript(parse_measure(args.spec), args.n, args.seed)
    out = {"measure": args.spec, "n": args.n, "seed": args.seed, "bits": smp.bits}
    if args.transcript:
        out["generator_bits"] = smp.generator_bits
    _print_json(out)
    return EXIT_OK


def _emit(report, args):
    ok, problems = validate_report_detail(report, rederive=False)
    report["validation"] = {"valid": ok, "problems": problems}
    text = dump_report(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.csv:
        write_csv(report, args.csv)
    if args.figures:
        from .plotting import render_figures

        for p in render_figures(report, args.figures):
            print(f"wrote {p}", file=sys.stderr)
    if not ok:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_INCONCLUSIVE if report["verdict"] in _INCONCLUSIVE else EXIT_OK


def cmd_adversary(args):
    cfg = ExperimentConfig.load(args.config)
    return _emit(run_experiment(cfg, args.mode), args)


def cmd_run(args):
    if args.list:
        for name in bundled_scenarios():
            print(name)
        return EXIT_OK
    if not args.config:
        print("run: --config is required unless --list is given", file=sys.stderr)
        return EXIT_INVALID
    return _emit(run_experiment(ExperimentConfig.load(args.config)), args)


def cmd_verify(args):
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        print(f"cannot read report: {e}", file=sys.stderr)
        return EXIT_INVALID
    report.pop("validation", None)
    ok, problems = validate_report_detail(report, rederive=not args.no_rederive)
    for p in problems:
        print(f"invalid: {p}")
    print("valid" if ok else "INVALID")
    return EXIT_OK if ok else EXIT_INVALID


def _output_args(p):
    p.add_argument("--out", help="write the report JSON here instead of stdout")
    p.add_argument("--csv", help="write the per-string trace CSV here")
    p.add_argument("--figures", metavar="DIR", help="render PNG figures into DIR")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="probid", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("family", help="measure families")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("measure", help="evaluate a cylinder probability")
    p.add_argument("action", choices=["eval"])
    p.add_argument("--spec", required=True)
    p.add_argument("--sigma", required=True)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("rho", help="certified interval for the distance between two measures")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--M", type=int, default=8)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("learner", help="run a learner on a finite input")
    p.add_argument("action", choices=["run"])
    p.add_argument("--spec", required=True)
    p.add_argument("--input", default="")
    p.add_argument("--budget", type=int, default=64)
    p.set_defaults(func=cmd_learner)

    p = sub.add_parser("adversary", help="run one adversary operation from a config")
    p.add_argument("mode", choices=["stage", "amplify", "diagonalize"])
    p.add_argument("--config", required=True, help="config path or bundled scenario name")
    _output_args(p)
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("sample", help="exact sampling from a measure")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transcript", action="store_true", help="include generator bits per emitted bit")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="re-check every claim in a report")
    p.add_argument("report")
    p.add_argument("--no-rederive", action="store_true", help="skip rerunning the echoed config")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="run a scenario of any kind")
    p.add_argument("--config", help="config path or bundled scenario name")
    p.add_argument("--list", action="store_true", help="list bundled scenarios")
    _output_args(p)
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HypothesisViolation as e:
        print(f"hypothesis violation: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ConfigError, FamilyError, LearnerError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
