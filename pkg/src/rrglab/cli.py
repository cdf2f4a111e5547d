"""Command-line front end.

    rrglab sample --n 8 --d 3 --trials 10 --seed 1
    rrglab count --input k4.graph
    rrglab tv --n 8 --p "mu2 + mu1" --q mu3
    rrglab couple inclusion --n 8 --d1 3 --d2 5 --trials 10000 --seed 7
    rrglab experiment moments --n 24 --d 3 --statistic triangles --trials 100000
    rrglab suite acceptance --only overlay

Exit codes: 0 success, 1 failed checks, 2 precondition failure, 3 budget exceeded.
RRG_SEED in the environment overrides --seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

from . import estimators as est
from .config import CAPS
from .counting import count_one_factorisations_ordered, count_perfect_matchings, count_triangles
from .errors import BudgetError, PreconditionError
from .graph import Graph
from .oracle import exact_distribution, exact_tv, parse_measure
from .report import ExperimentReport, _plain, config_hash
from .samplers import SeededStream, sample_oplus

DEFAULT_SEED = 20240601


def _seed(args) -> int:
    env = os.environ.get("RRG_SEED")
    if env is not None:
        return int(env, 0)
    return args.seed if args.seed is not None else DEFAULT_SEED


def _emit(payload, args) -> None:
    text = json.dumps(_plain(payload), sort_keys=True, indent=2)
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_csv(path: str, rows: list[dict]) -> None:
    cols: list[str] = []
    for r in rows:
        cols.extend(c for c in r if c not in cols)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(_plain(v)) if isinstance(v, (dict, list)) else _plain(v)
                        for k, v in r.items()})


def _flat(report: ExperimentReport) -> dict:
    row = dict(report.params)
    for name, group in (("", report.estimates), ("se_", report.stderr)):
        for k, v in group.items():
            row[name + k] = float(v) if isinstance(v, Fraction) else v
    return row


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_sample(args) -> int:
    seed = _seed(args)
    expr = parse_measure(args.measure) if args.measure else parse_measure(f"mu{args.d}")
    gen = SeededStream(seed).generator()
    parts = expr.parts if hasattr(expr, "parts") else (expr,)
    out = []
    for _ in range(args.trials):
        out.append(sample_oplus(parts, args.n, gen).graph.to_text())
    text = "\n".join(out)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_count(args) -> int:
    with open(args.input) as fh:
        g = Graph.from_text(fh.read())
    degs = set(g.degrees())
    ordered = None
    if len(degs) == 1 and g.n <= CAPS.one_factor_n:
        ordered = count_one_factorisations_ordered(g, degs.pop())
    _emit({"pm": count_perfect_matchings(g), "triangles": count_triangles(g), "ordered_1f": ordered}, args)
    return 0


def cmd_tv(args) -> int:
    p, q = parse_measure(args.p), parse_measure(args.q)
    tv = exact_tv(exact_distribution(p, args.n), exact_distribution(q, args.n))
    params = {"n": args.n, "p": str(p), "q": str(q)}
    _emit(ExperimentReport("tv", params, estimates={"tv": tv}), args)
    return 0


def cmd_couple(args) -> int:
    from . import coupling as cp
    seed = _seed(args)
    kind = args.kind
    if kind == "maximal":
        p = exact_distribution(parse_measure(args.p), args.n)
        q = exact_distribution(parse_measure(args.q), args.n)
        tab = cp.maximal_coupling(p, q)
        tv = exact_tv(p, q)
        rep = ExperimentReport("maximal", {"n": args.n, "p": args.p, "q": args.q},
                               estimates={"diagonal_mass": tab.diagonal_mass(), "tv": tv,
                                          "pairs": len(tab.joint)},
                               checks={"diagonal_is_one_minus_tv": tab.diagonal_mass() == 1 - tv})
    elif kind == "strassen":
        gen = SeededStream(seed).generator()
        rows = []
        for _ in range(args.trials):
            h = cp.planted_instance(gen, args.delta, args.epsilon)
            r = cp.strassen_coupling(h, args.delta, args.epsilon)
            rows.append(float(r.violation))
        bound = cp.strassen_bound(args.delta, args.epsilon)
        rep = ExperimentReport("strassen", {"delta": args.delta, "epsilon": args.epsilon}, seed, args.trials,
                               estimates={"max_violation": max(rows), "mean_violation": sum(rows) / len(rows)},
                               references={"bound": bound},
                               checks={"violation_bounded": max(rows) <= bound + 1e-12})
    elif kind == "extend":
        rep = cp.matching_extension_coupling(args.n, args.d, args.trials, seed)
    elif kind == "asp":
        gen = SeededStream(seed).generator()
        draws = [cp.asp_sample(args.n, args.d, args.k, gen) for _ in range(args.trials)]
        rep = ExperimentReport("asp", {"n": args.n, "d": args.d, "k": args.k}, seed, args.trials,
                               estimates={"mean_attempts": sum(x.attempts for x in draws) / len(draws),
                                          "graphs": [x.graph.edge_string() for x in draws[:args.show]]})
    elif kind == "zeta":
        rep = cp.zeta_experiment(args.n, args.d, args.epsilon, args.trials, seed)
    elif kind == "inclusion":
        rep = cp.inclusion_pipeline(args.n, args.d1, args.d2, args.trials, seed, case=args.case,
                                    epsilon=args.epsilon, workers=args.workers)
    else:  # pragma: no cover - argparse restricts choices
        raise PreconditionError(kind)
    _emit(rep, args)
    if args.csv:
        _write_csv(args.csv, [_flat(rep)])
    return 0 if rep.passed else 1


def cmd_experiment(args) -> int:
    seed = _seed(args)
    reports = []
    for n in args.n:
        for d in args.d:
            if args.kind == "moments":
                m = est.estimate_moments(n, d, args.statistic, args.trials, seed, workers=args.workers)
                rep = ExperimentReport("moments", {"n": n, "d": d, "statistic": args.statistic}, seed,
                                       args.trials, estimates=m.to_dict(),
                                       references={"triangle_reference": est.triangle_reference(d),
                                                   "claim_error_scale": est.claim_error_scale(n, d)})
            elif args.kind == "tails":
                rep = est.concentration_experiment(n, d, args.trials, seed, args.exponent, workers=args.workers)
            else:
                rep = est.residual_variance_experiment(n, d, args.trials, seed, workers=args.workers)
            reports.append(rep)
    _emit(reports[0] if len(reports) == 1 else reports, args)
    if args.csv:
        _write_csv(args.csv, [_flat(r) for r in reports])
    return 0 if all(r.passed for r in reports) else 1


def cmd_suite(args) -> int:
    from .suite import run_acceptance, run_calibration
    seed = _seed(args)
    if args.name == "calibration":
        res = run_calibration(seed)
        _emit({"suite": "calibration", "seed": seed, "config_hash": config_hash({"suite": "calibration",
                                                                                 "seed": seed}), **res}, args)
        return 0 if all(res["checks"].values()) else 1
    only = [o for part in (args.only or []) for o in part.split(",") if o]
    results = run_acceptance(only or None, seed, args.workers, echo=lambda s: print(s, file=sys.stderr))
    config = {"suite": "acceptance", "seed": seed, "only": only}
    _emit({**config, "config_hash": config_hash(config), "results": [r.to_dict() for r in results],
           "failed": [r.name for r in results if not r.passed]}, args)
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="master seed (RRG_SEED overrides)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rrglab", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw graphs from mu_d or a measure expression")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--measure", help='e.g. "mu2 + mu1" or "nu3"; defaults to mu_d')
    p.add_argument("--trials", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("count", help="PM, triangle and ordered 1-factorisation counts of a graph file")
    p.add_argument("--input", required=True)
    _common(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("tv", help="exact TV distance between two measure expressions")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    _common(p)
    p.set_defaults(func=cmd_tv)

    p = sub.add_parser("couple", help="coupling constructions")
    p.add_argument("kind", choices=["maximal", "strassen", "extend", "asp", "zeta", "inclusion"])
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--d1", type=int, default=3)
    p.add_argument("--d2", type=int, default=5)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p", default="mu2 + mu1")
    p.add_argument("--q", default="mu3")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--case", choices=["decomposition", "blocks"], default="decomposition")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--show", type=int, default=5, help="graphs listed in asp reports")
    p.add_argument("--csv")
    _common(p)
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("experiment", help="Monte Carlo moment experiments")
    p.add_argument("kind", choices=["moments", "tails", "projection"])
    p.add_argument("--n", type=int, nargs="+", default=[24])
    p.add_argument("--d", type=int, nargs="+", default=[3])
    p.add_argument("--statistic", type=str.upper, choices=[est.PM, est.TRIANGLES, est.JOINT], default=est.TRIANGLES)
    p.add_argument("--exponent", type=float, default=1.1)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--csv", help="one row per (n, d) cell")
    _common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("suite", help="acceptance or calibration suite")
    p.add_argument("name", choices=["acceptance", "calibration"])
    p.add_argument("--only", action="append", help="criterion names, comma separated")
    _common(p)
    p.set_defaults(func=cmd_suite)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"rrglab: precondition failed: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"rrglab: budget exceeded: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
