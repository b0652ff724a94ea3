"""Batch audit of published (λ', β) multiplier pairs and singularity bundles."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .certificate import NumericalFailure, Verdict, dumps
from .params import ProblemParams, compute_Hn, compute_K0, compute_pc
from .stability import StabilitySpec, WeightFunction, certify_stability
from .subsolution import SubsolutionSpec, build_omega, certify_subsolution

# n -> (λ', β) in K0 units; rows 19..30 share one pair
TABULATED_MULTIPLIERS = {13: (2.03, 2.15), 14: (2.34, 2.96), 15: (2.76, 3.12),
                         16: (3.13, 3.78), 17: (3.26, 3.60), 18: (3.5, 3.78),
                         31: (3.06, 4.05)}
TABULATED_MULTIPLIERS.update({n: (4.6, 10.0) for n in range(19, 31)})
TABULATED_MULTIPLIERS = dict(sorted(TABULATED_MULTIPLIERS.items()))

DEFAULT_FIXED_P = (50.0, 100.0, 500.0, 1000.0)
EQUALITY_RTOL = 1e-12
CONTRADICTION_SLACK = 0.02


def default_p_grid(n: int) -> list:
    return [1.05 * compute_pc(n), *DEFAULT_FIXED_P]


@dataclass(frozen=True)
class AuditRow:
    n: int
    m: float
    p: float
    lambda_mult: float
    beta_mult: float
    sub_verdict: str
    stab_verdict: str
    sub_margin: float
    stab_margin: float
    sub_witness_r: float
    stab_witness_r: float
    bundle_valid: bool
    precision: str
    note: str = ""


@dataclass
class RunConfig:
    """Everything needed to reproduce a run."""

    command: str = "table1"
    n: list = field(default_factory=lambda: list(TABULATED_MULTIPLIERS))
    p_grid: list | None = None      # None: default grid per n
    m: float = 3.5
    lambda_mult: float | None = None
    beta_mult: float | None = None
    weight: str = "improved"
    nodes: int = 400
    precision: str = "auto"
    seed: int = 0
    workers: int = 1
    out: str | None = None

    def to_json(self) -> str:
        return dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


def ordering_ok(params: ProblemParams, lambda_mult: float, beta_mult: float) -> bool:
    """β > λ', or the equality case β = λ' = Hn/(p K0)."""
    if beta_mult > lambda_mult:
        return True
    edge = compute_Hn(params.n) / (params.p * compute_K0(params))
    return (math.isclose(beta_mult, lambda_mult, rel_tol=EQUALITY_RTOL)
            and math.isclose(beta_mult, edge, rel_tol=EQUALITY_RTOL))


def audit_row(n: int, p: float, m: float, lambda_mult: float, beta_mult: float,
              weight: str = "improved", precision: str = "auto") -> AuditRow:
    params = ProblemParams(n, p, m)
    try:
        sub_spec = SubsolutionSpec(params, lambda_mult)
        sub = certify_subsolution(sub_spec, precision)
        stab = certify_stability(StabilitySpec(params, beta_mult, WeightFunction(weight, n)),
                                 build_omega(sub_spec), precision)
    except (NumericalFailure, ArithmeticError, ValueError) as exc:
        nan = math.nan
        return AuditRow(n, m, p, lambda_mult, beta_mult, Verdict.INCONCLUSIVE.value,
                        Verdict.INCONCLUSIVE.value, nan, nan, nan, nan, False, precision,
                        f"numerical failure: {exc}")
    valid = (sub.verdict is Verdict.CERTIFIED and stab.verdict is Verdict.CERTIFIED
             and ordering_ok(params, lambda_mult, beta_mult))
    return AuditRow(n, m, p, lambda_mult, beta_mult, sub.verdict.value, stab.verdict.value,
                    sub.worst_margin, stab.worst_margin, sub.worst_location,
                    stab.worst_location, valid, sub.precision)


def _row_job(args):
    return audit_row(*args)


def audit_table1(p_grid=None, m: float = 3.5, ns=None, weight: str = "improved",
                 precision: str = "auto", workers: int = 1) -> list:
    """Certify every tabulated (λ', β) pair at each p of the grid.

    Rows come back ordered by (n, p) whatever the worker count.  A ``p`` at
    or below p_c(n) is rejected up front.
    """
    ns = list(TABULATED_MULTIPLIERS) if ns is None else list(ns)
    jobs = []
    for n in ns:
        lam, beta = TABULATED_MULTIPLIERS[n]
        grid = default_p_grid(n) if p_grid is None else list(p_grid)
        if not grid:
            raise ValueError("p_grid must be nonempty")
        pc = compute_pc(n)
        for p in grid:
            if pc is None or not p > pc:
                raise ValueError(f"p={p} is not above p_c({n})")
            jobs.append((n, float(p), m, lam, beta, weight, precision))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_row_job, jobs))
    return [_row_job(j) for j in jobs]


def rows_to_csv(rows) -> str:
    names = list(AuditRow.__dataclass_fields__)
    lines = [",".join(names)]
    for row in rows:
        lines.append(",".join(_csv_cell(getattr(row, k)) for k in names))
    return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    text = str(v)
    return f'"{text}"' if "," in text else text


def row_to_dict(row: AuditRow) -> dict:
    """JSON-safe dict: NaN margins become null."""
    return {k: (None if isinstance(v, float) and math.isnan(v) else v)
            for k, v in asdict(row).items()}


def singularity_report(n: int, p: float, m: float, lambda_mult: float, beta_mult: float,
                       lambda_star: float | None = None, weight: str = "improved",
                       precision: str = "auto") -> dict:
    """Combine both certificates, the β/λ' ordering and an optional λ* estimate.

    ``bundle`` is valid, invalid or inconclusive; a valid bundle whose λ*
    exceeds λ'·K0 by more than 2% is flagged as a contradiction.
    """
    params = ProblemParams(n, p, m)
    sub_spec = SubsolutionSpec(params, lambda_mult)
    sub = certify_subsolution(sub_spec, precision)
    stab = certify_stability(StabilitySpec(params, beta_mult, WeightFunction(weight, n)),
                             build_omega(sub_spec), precision)
    ordered = ordering_ok(params, lambda_mult, beta_mult)
    verdicts = (sub.verdict, stab.verdict)
    if not ordered or Verdict.REFUTED in verdicts:
        bundle = "invalid"
    elif Verdict.INCONCLUSIVE in verdicts:
        bundle = "inconclusive"
    else:
        bundle = "valid"
    K0 = float(compute_K0(params))
    report = {
        "n": n, "p": float(p), "m": float(m),
        "lambda_mult": float(lambda_mult), "beta_mult": float(beta_mult),
        "K0": K0,
        "subsolution": sub.to_dict(),
        "stability": stab.to_dict(),
        "ordering_ok": ordered,
        "bundle": bundle,
        "precision": sub.precision,
        "lambda_bound": lambda_mult * K0,
        "lambda_star": None,
        "contradiction": False,
    }
    if lambda_star is not None:
        report["lambda_star"] = float(lambda_star)
        report["contradiction"] = (bundle == "valid"
                                   and lambda_star > lambda_mult * K0 * (1 + CONTRADICTION_SLACK))
    return report
