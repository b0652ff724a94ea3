"""Hardy-Rellich weights and the pointwise stability certificate.

The stability hypothesis asks that  p β K0 (1+ω)^{p-1} <= W(r)  on (0, 1) for a
weight W admitted by a Hardy-Rellich inequality ∫(Δφ)² >= ∫ W φ².  Both sides
scale like r^{-4} at the origin, so the test is carried out on

    β_max(r) = r⁴W(r) / (p K0 r⁴(1+ω)^{p-1}),

and the certificate compares β with inf_{(0,1)} β_max.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import IntegrationWarning, quad

from .certificate import CertificateReport, classify
from .params import (EXTENDED_DPS, DomainError, ProblemParams, compute_Hn, compute_K0,
                     resolve_precision)
from .radial import PowerSum
from .search import scan_and_refine

WEIGHT_KINDS = ("classical", "improved")
IMPROVED_SHIFT = 0.9


@dataclass(frozen=True)
class WeightFunction:
    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"weight kind must be one of {WEIGHT_KINDS}")
        if self.n < 5:
            raise DomainError("Hardy-Rellich weights need n >= 5")

    def scaled(self, r):
        """r⁴ W(r), finite and positive on [0, 1); tends to H_n as r -> 0."""
        n = self.n
        if isinstance(r, mpmath.mpf):
            log, expm1 = mpmath.log, mpmath.expm1
        else:
            r = np.asarray(r, dtype=float)
            log, expm1 = np.log, np.expm1
        if self.kind == "classical":
            return compute_Hn(n) + 0 * r
        lr = log(r)
        near = -expm1((n / 2 - 2) * lr)               # 1 - r^{n/2-2}
        shifted = 1 - IMPROVED_SHIFT * r ** (n / 2 - 1)
        A = (n - 2) ** 2 * (n - 4) ** 2 / 16
        B = (n - 1) * (n - 4) ** 2 / 4
        return A / (shifted * near) + B / near

    def __call__(self, r):
        return weight_eval(self, r)


def weight_eval(w: WeightFunction, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any((r_arr <= 0) | (r_arr >= 1)):
        raise ValueError("weights are evaluated on the open interval (0, 1)")
    return w.scaled(r_arr) / r_arr ** 4


@dataclass(frozen=True)
class StabilitySpec:
    params: ProblemParams
    beta_mult: float
    weight: WeightFunction

    def __post_init__(self):
        if self.beta_mult < 0:
            raise ValueError("beta_mult must be non-negative")
        if self.weight.n != self.params.n:
            raise ValueError("weight dimension differs from the problem dimension")


def _scaled_source(omega: PowerSum, p, r):
    """r⁴ (1+ω(r))^{p-1}, evaluated in log form."""
    if isinstance(r, mpmath.mpf):
        return mpmath.exp(4 * mpmath.log(r) + (p - 1) * mpmath.log(1 + omega(r)))
    r = np.asarray(r, dtype=float)
    return np.exp(4 * np.log(r) + (p - 1) * np.log(1 + omega(r)))


def _origin_limit(omega: PowerSum, p) -> float:
    """lim_{r->0} r⁴(1+ω)^{p-1} read off the most singular term of ω."""
    singular = [(c, e) for c, e in omega.terms if e < 0]
    if not singular:
        return 0.0
    c, e = min(singular, key=lambda t: t[1])
    power = float(e * (p - 1))
    if math.isclose(power, -4.0, rel_tol=1e-12):
        return float(c) ** float(p - 1)
    return math.inf if power < -4 else 0.0


def beta_envelope(spec: StabilitySpec, omega: PowerSum, r):
    """β_max(r) in K0 multiplier units."""
    pk0 = spec.params.p * compute_K0(spec.params)
    return spec.weight.scaled(r) / (pk0 * _scaled_source(omega, spec.params.p, r))


def certify_stability(spec: StabilitySpec, omega: PowerSum,
                      precision: str = "auto") -> CertificateReport:
    """Decide p β K0 (1+ω)^{p-1} <= W(r) for every r in (0, 1).

    The infimum of β_max is taken over (i) the r -> 0 limit, (ii) a uniform
    scan in r and a logarithmic scan toward the origin, each refined by
    golden-section search, and (iii) for the classical weight the r -> 1
    limit (the improved weight diverges there).
    """
    params = spec.params
    used = resolve_precision(params, precision)
    pk0 = params.p * compute_K0(params)
    Hn = compute_Hn(params.n)

    limit0 = _origin_limit(omega, params.p)
    candidates = [(Hn / (pk0 * limit0) if limit0 > 0 else math.inf, 0.0, "r->0")]
    neg = lambda r: -beta_envelope(spec, omega, r)
    lin = scan_and_refine(neg, 1e-6, 1 - 1e-9)
    candidates.append((-lin.value, lin.argmax, "scan"))
    logs = scan_and_refine(lambda t: neg(10.0 ** t), -12.0, -1.0)
    candidates.append((-logs.value, 10.0 ** logs.argmax, "log-scan"))
    if spec.weight.kind == "classical":
        tail = float(_scaled_source(omega, params.p, 1.0))
        candidates.append((Hn / (pk0 * tail), 1.0, "r->1"))

    beta_max, where, how = min(candidates, key=lambda c: c[0])
    if used == "extended" and 0 < where < 1:
        with mpmath.workdps(EXTENDED_DPS):
            hp = StabilitySpec(params.with_precision("extended"), spec.beta_mult, spec.weight)
            beta_max = float(beta_envelope(hp, omega, mpmath.mpf(where)))

    margin = beta_max - spec.beta_mult
    tol = 1e-9 * max(abs(beta_max), 1.0)
    details = {
        "beta_mult": float(spec.beta_mult),
        "beta_max": float(beta_max),
        "located_by": how,
        "weight": spec.weight.kind,
        "origin_limit": candidates[0][0] if math.isfinite(candidates[0][0]) else None,
        "linearisation_exponent": "p-1",
    }
    return CertificateReport(classify(margin, tol), float(margin), float(where),
                             "envelope-scan", used, details)


@dataclass(frozen=True)
class HRSample:
    min_ratio: float
    worst_trial: int
    ratios: tuple
    failures: tuple


def random_clamped_polynomial(rng: np.random.Generator, max_degree: int = 8) -> Polynomial:
    """(1-r)² q(r) with q of random degree <= max_degree and Gaussian coefficients."""
    deg = int(rng.integers(0, max_degree + 1))
    q = Polynomial(rng.standard_normal(deg + 1))
    return Polynomial([1.0, -1.0]) ** 2 * q


def rellich_quotient(phi: Polynomial, w: WeightFunction, epsrel: float = 1e-10):
    """(∫(Δφ)² r^{n-1} dr / ∫ W φ² r^{n-1} dr, convergence flag) by adaptive quadrature."""
    n = w.n
    d1, d2 = phi.deriv(), phi.deriv(2)
    # (Δφ)² r^{n-1} = (r φ'' + (n-1) φ')² r^{n-3}
    lap_r = Polynomial([0.0, 1.0]) * d2 + (n - 1) * d1
    num_f = lambda r: lap_r(r) ** 2 * r ** (n - 3)
    den_f = lambda r: float(w.scaled(r)) * phi(r) ** 2 * r ** (n - 5)
    ok = True
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            num = quad(num_f, 0.0, 1.0, epsabs=0.0, epsrel=epsrel, limit=200)[0]
            den = quad(den_f, 0.0, 1.0, epsabs=0.0, epsrel=epsrel, limit=200)[0]
        except IntegrationWarning:
            ok = False
            warnings.simplefilter("ignore", IntegrationWarning)
            num = quad(num_f, 0.0, 1.0, epsrel=epsrel, limit=200)[0]
            den = quad(den_f, 0.0, 1.0, epsrel=epsrel, limit=200)[0]
    return num / den, ok


def sample_hardy_rellich(w: WeightFunction, trials: int, seed: int) -> HRSample:
    """Smallest Rellich quotient over random clamped radial test functions.

    Each trial draws from its own generator spawned from ``seed``, so trials
    are independent of execution order.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    children = np.random.SeedSequence(seed).spawn(trials)
    ratios, failures = [], []
    for i, child in enumerate(children):
        phi = random_clamped_polynomial(np.random.default_rng(child))
        ratio, ok = rellich_quotient(phi, w)
        ratios.append(ratio)
        if not ok:
            failures.append(i)
    k = int(np.argmin(ratios))
    return HRSample(float(ratios[k]), k, tuple(ratios), tuple(failures))
