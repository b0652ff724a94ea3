"""Minimal branch of  Δ²u = λ(1+u)^p  (clamped, radial) by λ-continuation.

Newton's method runs on the pointwise discrete system Δ²_h u - λ(1+u)^p = 0.
Its Jacobian Δ²_h - pλ diag((1+u)^{p-1}) is similar to the symmetric banded
matrix V^{1/2}(...)V^{-1/2}, whose lowest eigenvalue is the stability value μ₁.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded, eig_banded

from .params import DomainError, ProblemParams, compute_alpha, compute_pc
from .radial import (BANDS, DiscreteBilaplacian, PowerSum, RadialField, RadialGrid,
                     assemble_discrete_bilaplacian)

RESIDUAL_TOL = 1e-12
MONOTONE_TOL = 1e-9


@dataclass
class BranchPoint:
    lam: float
    solution: RadialField
    center_value: float
    mu1: float
    converged: bool
    newton_iters: int
    residual: float = math.nan


@dataclass
class StepPolicy:
    initial: float | None = None   # default: λ₁/(64 p)
    growth: float = 2.0
    max_step: float | None = None  # default: λ₁/(16 p)
    fast_iters: int = 4            # grow the step only after quick Newton solves
    min_rel_step: float = 1e-8
    max_steps: int = 5000


@dataclass
class BranchResult:
    points: list
    lambda_star_estimate: float
    fold_detected: bool
    termination: str
    nodes: int
    spacing: str
    final_step: float
    lambda1: float
    mu1_ratio: float
    flags: list = field(default_factory=list)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([pt.lam for pt in self.points])

    def to_csv(self) -> str:
        lines = ["lambda,u0,mu1,converged"]
        for pt in self.points:
            lines.append(f"{pt.lam!r},{pt.center_value!r},{pt.mu1!r},{str(pt.converged).lower()}")
        return "\n".join(lines) + "\n"


def _operator(grid) -> DiscreteBilaplacian:
    if isinstance(grid, DiscreteBilaplacian):
        return grid
    return assemble_discrete_bilaplacian(grid)


def center_value(field: RadialField) -> float:
    """u(0) by the quadratic through the three innermost nodes."""
    r = field.grid.nodes[:3]
    v = field.values[:3]
    return float(np.polyval(np.polyfit(r, v, 2), 0.0))


def _full(op: DiscreteBilaplacian, u: np.ndarray) -> RadialField:
    return RadialField(op.grid, np.append(u, 0.0))


def _scaled_residual(op, abs_K, lam, p, u) -> float:
    # overshooting trial iterates may overflow; they are rejected as non-finite
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        g = np.exp(p * np.log1p(u))
        F = op.matvec(u) - lam * g
        scale = (abs_K @ np.abs(u)) / op.weights + lam * g
        rel = np.where(F == 0, 0.0, np.abs(F) / scale)
    res = float(np.max(rel))
    return (res if np.isfinite(res) else math.inf), F


def solve_bvp(lam: float, init, params: ProblemParams, grid,
              max_iter: int = 40) -> BranchPoint:
    """Damped Newton solve at fixed λ, started from ``init``.

    ``residual`` is the largest row-wise backward error
    |F_i| / ((|Δ²_h| |u|)_i + λ(1+u_i)^p); the raw residual of a fourth-order
    stencil carries roundoff of order eps·h⁻⁴ and cannot be driven lower.
    Failure to converge is reported with ``converged=False``.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    op = _operator(grid)
    p = params.p
    if init is None:
        u = np.zeros(op.size)
    elif isinstance(init, RadialField):
        u = init.values[:-1].copy()
    else:
        u = np.array(init, dtype=float)
    abs_K = abs(op.stiffness)

    res, F = _scaled_residual(op, abs_K, lam, p, u)
    it = 0
    ok = res <= RESIDUAL_TOL
    while not ok and it < max_iter:
        it += 1
        du = op.solve(-F, shift=p * lam * np.exp((p - 1) * np.log1p(u)))
        t = 1.0
        while True:
            v = u + t * du
            if np.all(np.isfinite(v)) and v.min() > -1:
                res_v, F_v = _scaled_residual(op, abs_K, lam, p, v)
                if res_v < (1 - 1e-4 * t) * res or res_v <= RESIDUAL_TOL:
                    break
            t /= 2
            if t < 1 / 64:
                break
        if t < 1 / 64:
            break
        u, res, F = v, res_v, F_v
        ok = res <= RESIDUAL_TOL
    field = _full(op, u) if np.all(np.isfinite(u)) else _full(op, np.zeros(op.size))
    point = BranchPoint(lam, field, center_value(field), math.nan, bool(ok), it, res)
    if ok:
        point.mu1 = mu1(point, params, op)
    return point


def _sym_shifted(op: DiscreteBilaplacian, diag_shift: np.ndarray) -> np.ndarray:
    """Upper-form symmetric band of V^{-1/2}KV^{-1/2} - diag(shift)."""
    upper = op.sym_band[:BANDS + 1].copy()
    upper[BANDS] -= diag_shift
    return upper


def lowest_eigenpair(op: DiscreteBilaplacian, potential: np.ndarray | None = None,
                     rtol: float = 1e-11, max_iter: int = 1000):
    """Smallest eigenvalue of Δ²_h - diag(potential) in the r^{n-1} inner product.

    Inverse iteration on the symmetric form when it is positive definite;
    otherwise (past a fold) LAPACK's banded selected-eigenvalue solver.
    Returns (eigenvalue, eigenvector as nodal values of the unknowns).
    """
    pot = np.zeros(op.size) if potential is None else potential
    upper = _sym_shifted(op, pot)
    try:
        chol = cholesky_banded(upper)
    except LinAlgError:
        vals, vecs = eig_banded(upper, select="i", select_range=(0, 0))
        mu, x = float(vals[0]), vecs[:, 0]
    else:
        x = np.sqrt(op.weights)
        x /= np.linalg.norm(x)
        mu = math.inf
        for _ in range(max_iter):
            y = cho_solve_banded((chol, False), x)
            # 1/(x·M⁻¹x) avoids the roundoff of forming x·Mx with a stiff M
            new = 1.0 / float(x @ y)
            x = y / np.linalg.norm(y)
            if abs(new - mu) <= rtol * abs(new):
                mu = new
                break
            mu = new
        else:
            raise LinAlgError("inverse iteration stagnated")
    phi = x / np.sqrt(op.weights)
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    return mu, phi


def mu1(point: BranchPoint, params: ProblemParams, grid) -> float:
    """Stability eigenvalue of Δ² - pλ(1+u)^{p-1} on the clamped space."""
    op = _operator(grid)
    u = point.solution.values[:-1]
    pot = params.p * point.lam * np.exp((params.p - 1) * np.log1p(u))
    return lowest_eigenpair(op, pot)[0]


def clamped_eigenpair(grid) -> tuple:
    op = _operator(grid)
    value, phi = lowest_eigenpair(op)
    return value, _full(op, phi)


def lambda1(n: int, grid) -> float:
    """First clamped eigenvalue of Δ² on the unit ball of R^n."""
    if isinstance(grid, int):
        grid = RadialGrid.graded(grid, n)
    if _operator(grid).grid.n != n:
        raise ValueError("grid dimension differs from n")
    return clamped_eigenpair(grid)[0]


def continue_branch(params: ProblemParams, grid, policy: StepPolicy | None = None) -> BranchResult:
    """Follow the minimal branch from λ = 0 until the step collapses.

    A step is accepted only if Newton converges, μ₁ stays positive and the
    solution grows nodewise; otherwise it is halved.  Predictions use the
    tangent du/dλ = J⁻¹(1+u)^p.  The run stops when the step falls below
    ``min_rel_step`` times λ and reports λ* as the last accepted λ plus half
    the final step.
    """
    policy = policy or StepPolicy()
    op = _operator(grid)
    p = params.p
    lam1 = lowest_eigenpair(op)[0]
    step = policy.initial or lam1 / (64 * p)
    max_step = policy.max_step or lam1 / (16 * p)

    zero = _full(op, np.zeros(op.size))
    points = [BranchPoint(0.0, zero, 0.0, lam1, True, 0, 0.0)]
    lam, u = 0.0, np.zeros(op.size)
    termination = "step-collapse"
    for _ in range(policy.max_steps):
        if lam > 0 and step < policy.min_rel_step * lam:
            break
        tangent = op.solve(np.exp(p * np.log1p(u)), shift=p * lam * np.exp((p - 1) * np.log1p(u)))
        trial = solve_bvp(lam + step, u + step * tangent, params, op)
        v = trial.solution.values[:-1]
        if trial.converged and trial.mu1 > 0 and np.all(v >= u - MONOTONE_TOL):
            points.append(trial)
            lam, u = trial.lam, v
            if trial.newton_iters <= policy.fast_iters:
                step = min(step * policy.growth, max_step)
        else:
            step /= 2
    else:
        termination = "max-steps"

    result = BranchResult(points, lam + step / 2, False, termination, op.grid.size,
                          op.grid.spacing, step, lam1, math.nan)
    _classify_end(result)
    return result


def mu1_at(result: BranchResult, lam: float) -> float:
    """μ₁ interpolated linearly between computed branch points."""
    lams = result.lambdas
    mus = np.array([pt.mu1 for pt in result.points])
    return float(np.interp(lam, lams, mus))


def _classify_end(result: BranchResult) -> None:
    mus = np.array([pt.mu1 for pt in result.points])
    tail = mus[-11:]
    decreasing = bool(np.all(np.diff(tail) < 0))
    if not np.all(np.diff(mus) <= 0):
        result.flags.append("mu1 not monotone along the branch; rerun on a finer grid")
    half = mu1_at(result, result.lambda_star_estimate / 2)
    result.mu1_ratio = float(mus[-1] / half) if half > 0 else math.nan
    result.fold_detected = decreasing and result.mu1_ratio <= 0.1
    if result.termination == "step-collapse":
        # Newton stalls while μ₁ stays away from zero: u(0) runs away at an
        # almost constant λ, the signature of an unbounded extremal solution
        result.termination = "fold" if result.fold_detected else "steep-growth"


@dataclass(frozen=True)
class BoundReport:
    max_violation: float
    worst_lambda: float
    worst_r: float
    holds: bool


def check_upper_bound(result: BranchResult, params: ProblemParams, tol: float = 1e-9) -> BoundReport:
    """Check u_λ(r) <= r^{-alpha} - 1 at every node of every branch point."""
    pc = compute_pc(params.n)
    if params.n < 13 or pc is None or not params.p > pc:
        raise DomainError("the upper bound is only claimed for n >= 13 and p > p_c(n)")
    alpha = float(compute_alpha(params))
    worst = (-math.inf, math.nan, math.nan)
    for pt in result.points:
        r = pt.solution.grid.nodes
        excess = pt.solution.values - (r ** (-alpha) - 1)
        k = int(np.argmax(excess))
        if excess[k] > worst[0]:
            worst = (float(excess[k]), pt.lam, float(r[k]))
    return BoundReport(*worst, holds=worst[0] <= tol)


def weak_form_defects(point: BranchPoint, params: ProblemParams, grid, tests: int = 5) -> dict:
    """Relative defects of ∫ΔuΔφ = λ∫φ(1+u)^p against (1-r²)² r^{2k}, k < ``tests``.

    ``discrete`` uses the finite-volume Laplacian on both factors;
    ``continuum`` moves both derivatives onto φ and uses the exact Δ²φ, so it
    also measures discretisation error.
    """
    op = _operator(grid)
    r = op.grid.nodes
    u = point.solution.values
    vol = op.volumes
    source = point.lam * np.exp(params.p * np.log1p(u))
    lap_u = op.laplacian(u)
    discrete, continuum = [], []
    for k in range(tests):
        phi = PowerSum.from_terms([(1.0, 2 * k), (-2.0, 2 * k + 2), (1.0, 2 * k + 4)])
        ph = phi(r)
        rhs = float(np.sum(vol * ph * source))
        lhs = float(np.sum(vol * lap_u * op.laplacian(ph)))
        bil = float(np.sum(vol * u * phi.bilaplacian(params.n)(r)))
        discrete.append(abs(lhs - rhs) / abs(rhs))
        continuum.append(abs(bil - rhs) / abs(rhs))
    return {"discrete": max(discrete), "continuum": max(continuum)}


def grid_study(params: ProblemParams, sizes=(200, 400), policy: StepPolicy | None = None) -> dict:
    """λ* on successively refined graded grids and whether the fold persists."""
    runs = [continue_branch(params, RadialGrid.graded(s, params.n), policy) for s in sizes]
    stars = [r.lambda_star_estimate for r in runs]
    return {
        "sizes": list(sizes),
        "lambda_star": stars,
        "relative_spread": (max(stars) - min(stars)) / min(stars),
        "fold_confirmed": all(r.fold_detected for r in runs),
        "terminations": [r.termination for r in runs],
    }
