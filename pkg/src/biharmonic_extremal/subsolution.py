"""Sub-solution certificate for ω_m = a1 r^{-alpha} + a2 r^m - 1.

With x = r^{m+alpha} the sub-solution residual factorises as

    λ' K0 (1+ω)^p - Δ²ω = K0 r^{-alpha-4} (a1 + a2 x)^p [λ' - H(x)],
    H(x) = (a1 + a2 x)^{-p} (a1 + a2 (K1/K0) x),

so Δ²ω <= λ' K0 (1+ω)^p on (0, 1) exactly when λ' >= sup_{[0,1]} H.
Multipliers λ' are in units of K0 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from .certificate import CertificateReport, NumericalFailure, Verdict, classify
from .params import (EXTENDED_DPS, DerivedConstants, DomainError, ProblemParams,
                     compute_K0_printed, derive, resolve_precision)
from .radial import PowerSum, RadialField, RadialGrid, bilaplacian_powersum
from .search import scan_and_refine

TWO_PATH_TOL = 1e-9


@dataclass(frozen=True)
class SubsolutionSpec:
    params: ProblemParams
    lambda_mult: float

    def __post_init__(self):
        if self.lambda_mult < 0:
            raise ValueError("lambda_mult must be non-negative")
        if not self.params.supercritical:
            raise DomainError("the sub-solution needs p > (n+4)/(n-4)")

    @property
    def derived(self) -> DerivedConstants:
        return derive(self.params)


def build_omega(spec: SubsolutionSpec) -> PowerSum:
    d = spec.derived
    return PowerSum(((d.a1, -d.alpha), (d.a2, spec.params.m)), -1.0)


def _ratio(d: DerivedConstants):
    return d.a2 * d.K1 / d.K0


def H_profile(spec: SubsolutionSpec, x, sign: int = -1):
    """H(x); ``sign=+1`` evaluates the variant with (a1 + a2 x)^{+p}."""
    d = spec.derived
    p = spec.params.p
    c = _ratio(d)
    if isinstance(x, mpmath.mpf):
        return mpmath.exp(sign * p * mpmath.log(d.a1 + d.a2 * x)) * (d.a1 + c * x)
    x = np.asarray(x, dtype=float)
    return np.exp(sign * p * np.log(d.a1 + d.a2 * x)) * (d.a1 + c * x)


def _H_slope(spec: SubsolutionSpec, x: float, sign: int = -1) -> float:
    d = spec.derived
    p = float(spec.params.p)
    c = _ratio(d)
    base = d.a1 + d.a2 * x
    return float(base ** (sign * p) * (c + sign * p * d.a2 * (d.a1 + c * x) / base))


@dataclass(frozen=True)
class SupH:
    value: float
    argmax: float
    upper: float
    precision: str

    @property
    def width(self) -> float:
        return self.upper - self.value


def sup_H(spec: SubsolutionSpec, precision: str = "auto", sign: int = -1) -> SupH:
    """Enclosure [value, upper] of max_{[0,1]} H with its maximiser."""
    used = resolve_precision(spec.params, precision)
    peak = scan_and_refine(lambda x: H_profile(spec, x, sign), 0.0, 1.0)
    a, b = peak.bracket
    slope = max(abs(_H_slope(spec, a, sign)), abs(_H_slope(spec, b, sign)))
    value = peak.value
    if used == "extended":
        with mpmath.workdps(EXTENDED_DPS):
            hp = SubsolutionSpec(spec.params.with_precision("extended"), spec.lambda_mult)
            value = float(H_profile(hp, mpmath.mpf(peak.argmax), sign))
    return SupH(value, peak.argmax, value + slope * (b - a) + 4e-16 * abs(value), used)


def x_to_r(spec: SubsolutionSpec, x: float) -> float:
    d = spec.derived
    return float(x) ** (1.0 / (spec.params.m + d.alpha)) if x > 0 else 0.0


@dataclass(frozen=True)
class ResidualSample:
    """Sub-solution residual on a grid computed along two independent routes.

    ``direct`` expands the power sums; ``factorized`` uses the H-profile
    form.  ``scaled`` is the residual divided by K0 r^{-alpha-4}(a1+a2x)^p,
    which equals λ' - H(x) and has the sign of the residual.
    """

    direct: RadialField
    factorized: RadialField
    scaled: RadialField
    max_rel_disagreement: float


def residual_grid(spec: SubsolutionSpec, grid: RadialGrid) -> ResidualSample:
    d = spec.derived
    p, m, n = spec.params.p, spec.params.m, spec.params.n
    lam = spec.lambda_mult * d.K0
    r = grid.nodes
    omega = build_omega(spec)
    bilap = bilaplacian_powersum(omega, n)
    one_plus = d.a1 * r ** (-d.alpha) + d.a2 * r ** m
    source = lam * np.exp(p * np.log(one_plus))
    direct = source - bilap(r)

    x = r ** (m + d.alpha)
    base = d.a1 + d.a2 * x
    prefactor = d.K0 * r ** (-d.alpha - 4) * np.exp(p * np.log(base))
    gap = spec.lambda_mult - H_profile(spec, x)
    factorized = prefactor * gap

    scale = np.abs(source)
    for c, e in bilap.terms:
        scale = scale + np.abs(c * r ** e)
    disagreement = float(np.max(np.abs(direct - factorized) / scale))
    if disagreement > TWO_PATH_TOL:
        raise NumericalFailure(
            f"residual routes disagree by {disagreement:.3e} (relative); "
            "the factorised form no longer matches the power-sum expansion"
        )
    return ResidualSample(RadialField(grid, direct), RadialField(grid, factorized),
                          RadialField(grid, gap), disagreement)


def certify_subsolution(spec: SubsolutionSpec, precision: str = "auto",
                        grid_nodes: int = 1000) -> CertificateReport:
    """Decide Δ²ω_m <= λ' K0 (1+ω_m)^p on (0,1).

    The verdict comes from the enclosure of sup H; the grid residual is a
    second witness.  If the two disagree on the sign the report is downgraded
    to inconclusive rather than certified.
    """
    sup = sup_H(spec, precision)
    lam = spec.lambda_mult
    margin = lam - sup.value
    tol = sup.width + 1e-12 * abs(sup.value)
    verdict = classify(margin, tol)
    details = {
        "lambda_mult": float(lam),
        "sup_H": sup.value,
        "sup_H_upper": sup.upper,
        "argmax_x": sup.argmax,
        "H0": float(H_profile(spec, 0.0)),
        "H1": float(H_profile(spec, 1.0)),
    }
    method = "algebraic-supH"
    try:
        grid = RadialGrid.graded(grid_nodes, spec.params.n)
        sample = residual_grid(spec, grid)
    except NumericalFailure as exc:
        details["grid_failure"] = str(exc)
        verdict = Verdict.INCONCLUSIVE if verdict is Verdict.CERTIFIED else verdict
    else:
        k = int(np.argmin(sample.scaled.values))
        grid_min = float(sample.scaled.values[k])
        details.update(grid_min_scaled=grid_min, grid_argmin_r=float(grid.nodes[k]),
                       two_path_disagreement=sample.max_rel_disagreement)
        method = "both"
        if verdict is Verdict.CERTIFIED and grid_min < -tol:
            details["grid_failure"] = "grid residual negative despite sup-H certificate"
            verdict = Verdict.INCONCLUSIVE

    printed = sup_H(spec, "double", sign=+1)
    details["printed_variant"] = {
        "H_exponent": "+p",
        "sup_H": printed.value,
        "argmax_x": printed.argmax,
        "verdict": classify(lam - printed.value, printed.width).value,
        "K0_printed": float(compute_K0_printed(spec.params)),
    }
    if verdict is Verdict.CERTIFIED and margin < 0:
        verdict = Verdict.INCONCLUSIVE
    return CertificateReport(verdict, float(margin), x_to_r(spec, sup.argmax), method,
                             sup.precision, details)
