"""Command-line entry point: certificates, audits and branch runs."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from .audit import (RunConfig, audit_table1, row_to_dict, rows_to_csv, singularity_report)
from .branch import check_upper_bound, clamped_eigenpair, continue_branch
from .certificate import Verdict, dumps, exit_code
from .params import PRECISIONS, DomainError, ProblemParams, constants_record
from .radial import RadialGrid
from .stability import (WEIGHT_KINDS, StabilitySpec, WeightFunction, certify_stability,
                        sample_hardy_rellich)
from .subsolution import SubsolutionSpec, build_omega, certify_subsolution

HR_TOL = 1e-6


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params(args) -> ProblemParams:
    return ProblemParams(args.n, args.p, args.m)


def cmd_constants(args) -> int:
    _emit(dumps(constants_record(_params(args), args.precision)), args.out)
    return 0


def cmd_certify_subsolution(args) -> int:
    report = certify_subsolution(SubsolutionSpec(_params(args), args.lambda_mult), args.precision)
    _emit(dumps(report.to_dict()), args.out)
    return exit_code([report.verdict])


def cmd_certify_stability(args) -> int:
    params = _params(args)
    omega = build_omega(SubsolutionSpec(params, 0.0))
    spec = StabilitySpec(params, args.beta_mult, WeightFunction(args.weight, args.n))
    report = certify_stability(spec, omega, args.precision)
    _emit(dumps(report.to_dict()), args.out)
    return exit_code([report.verdict])


def cmd_hr_sample(args) -> int:
    sample = sample_hardy_rellich(WeightFunction(args.weight, args.n), args.trials, args.seed)
    passed = sample.min_ratio >= 1 - HR_TOL
    report = {
        "n": args.n, "weight": args.weight, "trials": args.trials, "seed": args.seed,
        "min_ratio": sample.min_ratio, "worst_trial": sample.worst_trial,
        "quadrature_failures": list(sample.failures),
        "verdict": (Verdict.CERTIFIED if passed else Verdict.REFUTED).value,
        "precision": "double",
    }
    _emit(dumps(report), args.out)
    return 0 if passed else 1


def _table1_config(args) -> RunConfig:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            return RunConfig.from_json(fh.read())
    cfg = RunConfig(command="table1", m=args.m, weight=args.weight,
                    precision=args.precision, workers=args.workers, out=args.out)
    if args.p:
        cfg.p_grid = list(args.p)
    if args.n:
        cfg.n = list(args.n)
    return cfg


def cmd_table1(args) -> int:
    cfg = _table1_config(args)
    rows = audit_table1(cfg.p_grid, cfg.m, cfg.n, cfg.weight, cfg.precision, cfg.workers)
    if args.format == "csv":
        text = rows_to_csv(rows)
    else:
        text = dumps({"config": asdict(cfg), "rows": [row_to_dict(r) for r in rows]})
    _emit(text, args.out or cfg.out)
    verdicts = [Verdict(v) for r in rows for v in (r.sub_verdict, r.stab_verdict)]
    return exit_code(verdicts)


def cmd_branch(args) -> int:
    result = continue_branch(_params(args), RadialGrid.graded(args.nodes, args.n))
    if args.format == "json":
        text = dumps({
            "n": args.n, "p": args.p, "nodes": result.nodes, "spacing": result.spacing,
            "lambda_star": result.lambda_star_estimate, "fold_detected": result.fold_detected,
            "termination": result.termination, "mu1_ratio": result.mu1_ratio,
            "lambda1": result.lambda1, "flags": result.flags, "precision": "double",
        })
    else:
        text = result.to_csv()
    _emit(text, args.out)
    return 0


def cmd_eigen(args) -> int:
    value, phi = clamped_eigenpair(RadialGrid.graded(args.nodes, args.n))
    vals = phi.values[:-1]
    report = {"n": args.n, "nodes": args.nodes, "lambda1": value,
              "one_signed": bool(vals.min() >= 0), "precision": "double"}
    _emit(dumps(report), args.out)
    return 0


def cmd_bound_check(args) -> int:
    params = _params(args)
    result = continue_branch(params, RadialGrid.graded(args.nodes, args.n))
    bound = check_upper_bound(result, params)
    report = dict(asdict(bound), n=args.n, p=args.p, nodes=args.nodes,
                  branch_points=len(result.points), precision="double")
    _emit(dumps(report), args.out)
    return 0 if bound.holds else 1


def cmd_report(args) -> int:
    lam_star = None
    if not args.no_branch:
        result = continue_branch(_params(args), RadialGrid.graded(args.nodes, args.n))
        lam_star = result.lambda_star_estimate
    report = singularity_report(args.n, args.p, args.m, args.lambda_mult, args.beta_mult,
                                lam_star, args.weight, args.precision)
    _emit(dumps(report), args.out)
    if report["contradiction"] or report["bundle"] == "invalid":
        return 1
    return 2 if report["bundle"] == "inconclusive" else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biharmonic-extremal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, *, n=True, p=True, m=True):
        sp = sub.add_parser(name)
        sp.set_defaults(func=func)
        if n:
            sp.add_argument("--n", type=int, required=True, help="space dimension")
        if p:
            sp.add_argument("--p", type=float, required=True, help="nonlinearity exponent")
        if m:
            sp.add_argument("--m", type=float, default=3.5, help="sub-solution exponent")
        sp.add_argument("--out", help="write output here instead of stdout")
        return sp

    def precision(sp):
        sp.add_argument("--precision", choices=PRECISIONS, default="auto")

    def weight(sp):
        sp.add_argument("--weight", choices=WEIGHT_KINDS, default="improved")

    def nodes(sp):
        sp.add_argument("--nodes", type=int, default=400, help="graded grid size")

    sp = add("constants", cmd_constants)
    sp.add_argument("--precision", choices=PRECISIONS, default="double")

    sp = add("certify-subsolution", cmd_certify_subsolution)
    sp.add_argument("--lambda-mult", type=float, required=True)
    precision(sp)

    sp = add("certify-stability", cmd_certify_stability)
    sp.add_argument("--beta-mult", type=float, required=True)
    weight(sp)
    precision(sp)

    sp = add("hr-sample", cmd_hr_sample, p=False, m=False)
    weight(sp)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("table1", cmd_table1, n=False, p=False)
    sp.add_argument("--n", type=int, nargs="+", help="rows to audit (default: all)")
    sp.add_argument("--p", type=float, nargs="+", help="p grid (default: per-row grid)")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--config", help="RunConfig JSON; overrides the other flags")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    weight(sp)
    precision(sp)

    sp = add("branch", cmd_branch)
    nodes(sp)
    sp.add_argument("--format", choices=("json", "csv"), default="csv")

    sp = add("eigen", cmd_eigen, p=False, m=False)
    nodes(sp)

    sp = add("bound-check", cmd_bound_check)
    nodes(sp)

    sp = add("report", cmd_report)
    sp.add_argument("--lambda-mult", type=float, required=True)
    sp.add_argument("--beta-mult", type=float, required=True)
    sp.add_argument("--no-branch", action="store_true", help="skip the λ* cross-check")
    weight(sp)
    precision(sp)
    nodes(sp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ValueError) as exc:
        parser.exit(2, f"{parser.prog}: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
