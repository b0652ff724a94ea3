"""Scalar constants of the clamped problem  Δ²u = λ(1+u)^p  on the unit ball.

Everything derived from (n, p, m) lives here so the certifiers and the branch
solver agree on one value of each constant.  The functions are written against
plain Python arithmetic, so passing ``mpmath.mpf`` values for ``p`` (or ``m``)
yields extended-precision results without a separate code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

import mpmath

PRECISIONS = ("double", "extended", "auto")
EXTENDED_DPS = 40


class DomainError(ValueError):
    """Raised when parameters fall outside the region where a constant is defined."""


def _sqrt(x):
    if isinstance(x, mpmath.mpf):
        return mpmath.sqrt(x)
    return math.sqrt(x)


def _as_p(params) -> Real:
    return params.p if isinstance(params, ProblemParams) else params


@dataclass(frozen=True)
class ProblemParams:
    n: int
    p: float
    m: float = 3.5

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 5:
            raise DomainError(f"dimension n must be an integer >= 5, got {self.n!r}")
        if not self.p > 1:
            raise DomainError(f"exponent p must exceed 1, got {self.p!r}")
        if not self.m > 0:
            raise DomainError(f"auxiliary exponent m must be positive, got {self.m!r}")

    @property
    def supercritical(self) -> bool:
        return self.p > (self.n + 4) / (self.n - 4)

    def with_precision(self, precision: str) -> "ProblemParams":
        """Copy with p and m promoted to mpmath floats when ``precision == 'extended'``."""
        if precision != "extended":
            return self
        return ProblemParams(self.n, mpmath.mpf(self.p), mpmath.mpf(self.m))


def compute_alpha(params) -> Real:
    """Exponent 4/(p-1) of the explicit singular profile r^{-alpha} - 1."""
    p = _as_p(params)
    if not p > 1:
        raise DomainError(f"alpha requires p > 1, got {p!r}")
    return 4 / (p - 1)


def compute_K0(params: ProblemParams) -> Real:
    """Eigenvalue at which ũ = r^{-alpha} - 1 solves Δ²ũ = K0 (1+ũ)^p exactly.

    Returned as alpha(alpha+2)(n-2-alpha)(n-4-alpha).  The printed closed form
    with the prefactor 8(p+1)/(p-1) is available as :func:`compute_K0_printed`.
    """
    if not params.supercritical:
        raise DomainError(
            f"K0 needs p > (n+4)/(n-4); got n={params.n}, p={params.p}"
        )
    a = compute_alpha(params)
    n = params.n
    return a * (a + 2) * (n - 2 - a) * (n - 4 - a)


def compute_K0_printed(params: ProblemParams) -> Real:
    p, n = params.p, params.n
    return 8 * (p + 1) / (p - 1) * (n - 2 * (p + 1) / (p - 1)) * (n - 4 * p / (p - 1))


def stability_product(n: int, p) -> Real:
    """(alpha+4)(alpha+2)(n-2-alpha)(n-4-alpha), which equals p*K0."""
    a = compute_alpha(p)
    return (a + 4) * (a + 2) * (n - 2 - a) * (n - 4 - a)


def compute_Hn(n: int) -> float:
    if n < 5:
        raise DomainError(f"H_n is only used for n >= 5, got {n}")
    return (n * (n - 4) / 4) ** 2


def compute_pc(n: int):
    """Closed-form critical exponent, or ``None`` where the formula has no meaning.

    The denominator n - 6 - sqrt(4 + n² - 4 sqrt(n² + H_n)) is negative for
    n <= 12, so only n >= 13 yields a value.
    """
    Hn = compute_Hn(n)
    s = _sqrt(4 + n * n - 4 * _sqrt(n * n + Hn))
    den = n - 6 - s
    if den <= 0:
        return None
    return (n + 2 - s) / den


def compute_K1(m, n: int) -> Real:
    return m * (m - 2) * (m + n - 2) * (m + n - 4)


def compute_coeffs(params: ProblemParams) -> tuple:
    """Coefficients (a1, a2) making a1 r^{-alpha} + a2 r^m - 1 clamped at r = 1."""
    a = compute_alpha(params)
    m = params.m
    return m / (m + a), a / (m + a)


@dataclass(frozen=True)
class DerivedConstants:
    alpha: float
    K0: float
    Hn: float
    pc: float | None
    K1: float
    a1: float
    a2: float


def derive(params: ProblemParams) -> DerivedConstants:
    a1, a2 = compute_coeffs(params)
    return DerivedConstants(
        alpha=compute_alpha(params),
        K0=compute_K0(params),
        Hn=compute_Hn(params.n),
        pc=compute_pc(params.n),
        K1=compute_K1(params.m, params.n),
        a1=a1,
        a2=a2,
    )


def needs_extended(params: ProblemParams) -> bool:
    """Large-p cancellation guard: (a1 + a2 x)^{-p} spans more than e^30."""
    a1, _ = compute_coeffs(params)
    return float(params.p) * abs(math.log(float(a1))) > 30


def resolve_precision(params: ProblemParams, precision: str) -> str:
    if precision not in PRECISIONS:
        raise ValueError(f"precision must be one of {PRECISIONS}, got {precision!r}")
    if precision == "auto":
        return "extended" if needs_extended(params) else "double"
    return precision


def constants_record(params: ProblemParams, precision: str = "double") -> dict:
    """Flat JSON-ready record used by the ``constants`` command."""
    used = resolve_precision(params, precision)
    with mpmath.workdps(EXTENDED_DPS):
        hp = params.with_precision(used)
        a1, a2 = compute_coeffs(hp)
        pc = compute_pc(params.n)
        rec = {
            "alpha": float(compute_alpha(hp)),
            # subcritical parameters have no K0; report null instead of failing
            "K0": float(compute_K0(hp)) if params.supercritical else None,
            "Hn": compute_Hn(params.n),
            "pc": None if pc is None else float(pc),
            "K1": float(compute_K1(hp.m, params.n)),
            "a1": float(a1),
            "a2": float(a2),
        }
    rec.update(n=params.n, p=float(params.p), m=float(params.m),
               supercritical=params.supercritical, precision=used)
    return rec
