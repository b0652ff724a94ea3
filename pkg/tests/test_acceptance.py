"""One test per acceptance criterion; the summary prints a PASS/FAIL line for each."""

import json
import math
import time

import numpy as np
import pytest

from biharmonic_extremal.audit import TABULATED_MULTIPLIERS, audit_table1, singularity_report
from biharmonic_extremal.branch import (check_upper_bound, continue_branch, lambda1, solve_bvp)
from biharmonic_extremal.certificate import Verdict
from biharmonic_extremal.cli import main
from biharmonic_extremal.params import (ProblemParams, compute_alpha, compute_Hn, compute_K0,
                                        compute_pc, stability_product)
from biharmonic_extremal.radial import (PowerSum, RadialGrid, assemble_discrete_bilaplacian,
                                        check_discrete_positivity)
from biharmonic_extremal.stability import (StabilitySpec, WeightFunction, certify_stability,
                                           sample_hardy_rellich)
from biharmonic_extremal.subsolution import (SubsolutionSpec, H_profile, build_omega,
                                             residual_grid, sup_H)

E2 = math.e ** 2
SPECS = [(n, p, m) for n in (13, 20, 31, 32) for p in (30.0, 500.0, 1e6) for m in (2.0, 3.5, 6.0)]


def bisect_pc(n):
    f = lambda p: stability_product(n, p) - compute_Hn(n)
    a, b = math.log((n + 4) / (n - 4) * (1 + 1e-9)), math.log(1e6)
    fa = f(math.exp(a))
    for _ in range(200):
        c = 0.5 * (a + b)
        fc = f(math.exp(c))
        if (fc > 0) == (fa > 0):
            a, fa = c, fc
        else:
            b = c
    return math.exp(0.5 * (a + b))


def test_criterion_01_constant_identities(record_criterion):
    rng = np.random.default_rng(2024)
    worst_identity = 0.0
    for _ in range(100):
        n = int(rng.integers(5, 60))
        p = (n + 4) / (n - 4) * (1 + 10 ** rng.uniform(-2, 4))
        params = ProblemParams(n, p)
        a = compute_alpha(params)
        rhs = (a + 4) * (a + 2) * (n - 2 - a) * (n - 4 - a)
        worst_identity = max(worst_identity, abs(p * compute_K0(params) - rhs) / rhs)
    worst_pc = max(abs(compute_pc(n) * compute_K0(ProblemParams(n, compute_pc(n))) - compute_Hn(n))
                   / compute_Hn(n) for n in range(13, 32))
    pc_gap = abs(compute_pc(13) - bisect_pc(13))
    ok = worst_identity <= 1e-12 and worst_pc <= 1e-9 and pc_gap <= 0.05
    record_criterion(1, ok, f"pK0 identity {worst_identity:.1e}, pK0=Hn at p_c {worst_pc:.1e}, "
                            f"p_c(13)={compute_pc(13):.4f} vs bisection gap {pc_gap:.1e}")
    assert ok


def test_criterion_02_exact_singular_solution(record_criterion):
    worst = 0.0
    r = np.linspace(1e-3, 1.0, 1000)
    for n in (13, 31):
        for p in (30.0, 500.0):
            params = ProblemParams(n, p)
            alpha = compute_alpha(params)
            profile = PowerSum(((1.0, -alpha),), -1.0)
            source = compute_K0(params) * np.exp(p * np.log1p(profile(r)))
            resid = profile.bilaplacian(n)(r) - source
            worst = max(worst, float(np.max(np.abs(resid)) / np.max(np.abs(source))))
    ok = worst <= 1e-8
    record_criterion(2, ok, f"max relative residual {worst:.1e}")
    assert ok


def test_criterion_03_H_profile(record_criterion):
    worst = 0.0
    for n, p, m in SPECS:
        spec = SubsolutionSpec(ProblemParams(n, p, m), 1.0)
        a1 = spec.derived.a1
        expect = math.exp((1 - p) * math.log(a1))
        worst = max(worst, abs(float(H_profile(spec, 0.0)) - expect) / expect)
    limit = sup_H(SubsolutionSpec(ProblemParams(32, 1e6, 2.0), E2)).value
    ok = worst <= 1e-12 and abs(limit - E2) <= 1e-3
    record_criterion(3, ok, f"H(0) identity {worst:.1e}, sup_H(m=2,p=1e6)={limit:.6f}, "
                            f"|sup - e^2|={abs(limit - E2):.1e}")
    assert ok


def test_criterion_04_two_path_residual(record_criterion):
    start = time.perf_counter()
    worst = 0.0
    for n, p, m in SPECS:
        spec = SubsolutionSpec(ProblemParams(n, p, m), 3.0)
        worst = max(worst, residual_grid(spec, RadialGrid.graded(1000, n)).max_rel_disagreement)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 10
    record_criterion(4, ok, f"max relative disagreement {worst:.1e} over {len(SPECS)} specs, "
                            f"{elapsed:.1f}s")
    assert ok


def test_criterion_05_large_dimension_case(record_criterion):
    start = time.perf_counter()
    outcome = {}
    for n in (13, 32, 33, 40, 50):
        params = ProblemParams(n, 500.0, 2.0)
        rep = certify_stability(StabilitySpec(params, E2 + 0.1, WeightFunction("classical", n)),
                                build_omega(SubsolutionSpec(params, 0.0)))
        outcome[n] = rep
    elapsed = time.perf_counter() - start
    high = all(outcome[n].verdict is Verdict.CERTIFIED for n in (32, 33, 40, 50))
    low = outcome[13].verdict is Verdict.REFUTED
    ok = high and low and elapsed < 10
    text = ", ".join(f"n={n}:{rep.verdict.value}({rep.worst_margin:+.3f}@r={rep.worst_location:.2f})"
                     for n, rep in outcome.items())
    record_criterion(5, ok, text)
    assert ok, text


def test_criterion_06_table_audit(record_criterion, tmp_path):
    start = time.perf_counter()
    out = tmp_path / "table1.json"
    code_a = main(["table1", "--out", str(out)])
    elapsed = time.perf_counter() - start
    first = out.read_bytes()
    out.unlink()
    code_b = main(["table1", "--out", str(out)])
    rows = json.loads(first)["rows"]
    complete = all(r["sub_margin"] is not None and r["stab_margin"] is not None
                   and r["sub_witness_r"] is not None and r["stab_witness_r"] is not None
                   for r in rows)
    covered = sorted({r["n"] for r in rows}) == list(range(13, 32)) and len(rows) == 19 * 5
    identical = first == out.read_bytes()
    ok = complete and covered and identical and code_a == code_b and elapsed < 300
    valid = sum(r["bundle_valid"] for r in rows)
    record_criterion(6, ok, f"{len(rows)} rows in {elapsed:.1f}s, {valid} valid bundles, "
                            f"byte-identical rerun: {identical}, exit code {code_a}")
    assert ok


def test_criterion_07_hardy_rellich(record_criterion):
    start = time.perf_counter()
    mins = {}
    for weight in ("classical", "improved"):
        for n in (13, 31):
            mins[weight, n] = sample_hardy_rellich(WeightFunction(weight, n), 200, 42).min_ratio
    elapsed = time.perf_counter() - start
    ok = min(mins.values()) >= 1 - 1e-6 and elapsed < 30
    text = ", ".join(f"{w}/n={n}: {v:.4f}" for (w, n), v in mins.items())
    record_criterion(7, ok, f"min Rellich ratios {text}; {elapsed:.1f}s")
    assert ok


def test_criterion_08_discrete_boggio(record_criterion):
    mins = {}
    for n in (5, 13, 31):
        rep = check_discrete_positivity(assemble_discrete_bilaplacian(RadialGrid.graded(200, n)))
        mins[n] = rep.min_entry
    ok = min(mins.values()) >= -1e-10
    record_criterion(8, ok, ", ".join(f"n={n}: min entry {v:.2e}" for n, v in mins.items()))
    assert ok


def test_criterion_09_branch(record_criterion):
    start = time.perf_counter()
    n, p = 13, 30.0
    params = ProblemParams(n, p)
    op = assemble_discrete_bilaplacian(RadialGrid.graded(200, n))
    lam = 1e-3
    small = solve_bvp(lam, None, params, op)
    linear = lam / (8 * n * (n + 2))
    small_ok = small.converged and abs(small.center_value - linear) <= 0.02 * linear

    run = continue_branch(params, op)
    fields = np.array([pt.solution.values for pt in run.points])
    decreasing_r = bool(np.all(np.diff(fields, axis=1) <= 1e-12))
    increasing_lam = bool(np.all(np.diff(fields, axis=0) >= -1e-9))
    mus = np.array([pt.mu1 for pt in run.points])
    mu_ok = bool(np.all(mus > 0) and np.all(np.diff(mus) < 0))

    lam1 = lambda1(n, op.grid)
    K0 = compute_K0(params)
    star = run.lambda_star_estimate
    bracket_ok = K0 <= star < lam1 / p

    fine = continue_branch(params, RadialGrid.graded(400, n)).lambda_star_estimate
    spread = abs(fine - star) / fine
    bound = check_upper_bound(run, params)
    elapsed = time.perf_counter() - start

    ok = (small_ok and decreasing_r and increasing_lam and mu_ok and bracket_ok
          and spread <= 0.02 and bound.holds and elapsed < 120)
    record_criterion(9, ok, f"u0(1e-3) rel err {abs(small.center_value - linear) / linear:.1e}; "
                            f"monotone r/λ {decreasing_r}/{increasing_lam}; μ1>0 decreasing {mu_ok}; "
                            f"λ*={star:.3f} in [{K0:.2f}, {lam1 / p:.1f}); 200→400 change {spread:.1e}; "
                            f"upper bound excess {bound.max_violation:.1e}; {elapsed:.1f}s")
    assert ok


def test_criterion_10_bound_cross_check(record_criterion):
    bundles = [(r.n, r.p, r.m, r.lambda_mult, r.beta_mult)
               for r in audit_table1() if r.bundle_valid]
    bundles.append((32, 1e6, 2.0, E2, E2 + 0.1))
    worst, failures, checked = 0.0, [], 0
    for n, p, m, lam_mult, beta_mult in bundles:
        run = continue_branch(ProblemParams(n, p, m), RadialGrid.graded(200, n))
        rep = singularity_report(n, p, m, lam_mult, beta_mult, run.lambda_star_estimate)
        if rep["bundle"] != "valid":
            continue
        checked += 1
        ratio = run.lambda_star_estimate / rep["lambda_bound"]
        worst = max(worst, ratio)
        if rep["contradiction"]:
            failures.append((n, p))
    ok = checked > 0 and not failures
    record_criterion(10, ok, f"{checked} valid bundles, max λ*/(λ'K0) = {worst:.3f}, "
                             f"contradictions: {failures or 'none'}")
    assert ok
