"""Radial calculus: exact operators on power sums and a clamped discrete bilaplacian.

For radial functions Δ = d²/dr² + (n-1)/r d/dr, so Δ r^e = e(e+n-2) r^{e-2}
and power sums are closed under Δ.  The discrete operator is a finite-volume
Laplacian applied twice,

    Δ²_h = V⁻¹ Sᵀ V⁻¹ S,

where S holds the r^{n-1}-weighted fluxes between neighbouring nodes and V
the cell volumes ∫ r^{n-1} dr.  The flux through r = 0 vanishes because the
face has zero area (even symmetry, u'(0) = u'''(0) = 0); the flux through
r = 1 is set to zero (u'(1) = 0) and u(1) = 0 is imposed by dropping the last
node from the unknowns.  Sᵀ V⁻¹ S is symmetric, so Δ²_h is self-adjoint in
the V-weighted inner product by construction.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

BANDS = 2  # pentadiagonal: two sub- and two super-diagonals


def laplacian_power(e, n: int) -> tuple:
    """Δ r^e = e(e+n-2) r^{e-2}; returns (coefficient, exponent)."""
    return e * (e + n - 2), e - 2


def bilaplacian_power(e, n: int) -> tuple:
    c1, e1 = laplacian_power(e, n)
    c2, e2 = laplacian_power(e1, n)
    return c1 * c2, e2


@dataclass(frozen=True)
class PowerSum:
    """Finite sum  offset + Σ c_i r^{e_i}  with distinct exponents."""

    terms: tuple = ()
    offset: float = 0.0

    def __post_init__(self):
        exps = [e for _, e in self.terms]
        if len(set(exps)) != len(exps):
            raise ValueError(f"exponents must be distinct, got {exps}")

    @classmethod
    def from_terms(cls, terms, offset=0.0) -> "PowerSum":
        """Build a PowerSum, merging equal exponents and folding r^0 into the offset."""
        merged: dict = {}
        for c, e in terms:
            if e == 0:
                offset = offset + c
            else:
                merged[e] = merged.get(e, 0) + c
        return cls(tuple((c, e) for e, c in merged.items() if c != 0), offset)

    def __call__(self, r):
        out = self.offset
        for c, e in self.terms:
            out = out + c * r ** e
        return out

    def derivative(self) -> "PowerSum":
        return PowerSum.from_terms([(c * e, e - 1) for c, e in self.terms])

    def laplacian(self, n: int) -> "PowerSum":
        return PowerSum.from_terms([
            (c * k, e2) for c, e in self.terms for k, e2 in [laplacian_power(e, n)]
        ])

    def bilaplacian(self, n: int) -> "PowerSum":
        return bilaplacian_powersum(self, n)

    def is_zero(self) -> bool:
        return self.offset == 0 and not self.terms


def bilaplacian_powersum(f: PowerSum, n: int) -> PowerSum:
    return PowerSum.from_terms([
        (c * k, e2) for c, e in f.terms for k, e2 in [bilaplacian_power(e, n)]
    ])


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes in (0, 1], last node at r = 1, origin excluded."""

    nodes: np.ndarray
    n: int
    spacing: str = "custom"

    def __post_init__(self):
        r = np.asarray(self.nodes, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise ValueError("a grid needs at least three nodes")
        if r[0] <= 0:
            raise ValueError("first node must be positive; the origin is excluded")
        if r[-1] != 1.0:
            raise ValueError("last node must be r = 1")
        if np.any(np.diff(r) <= 0):
            raise ValueError("nodes must be strictly increasing (duplicate or unsorted nodes)")
        object.__setattr__(self, "nodes", r)

    @classmethod
    def uniform(cls, size: int, n: int) -> "RadialGrid":
        return cls(_mapped_nodes(size, 0.0), n, "uniform")

    @classmethod
    def graded(cls, size: int, n: int, strength: float = 0.5) -> "RadialGrid":
        """Nodes clustered toward both r = 0 and r = 1.

        The map r = ξ - c sin(2πξ)/(2π) is odd about ξ = 0 and ξ = 1, so the
        spacing shrinks by the factor (1-c)/(1+c) at both ends.
        """
        if not 0 <= strength < 1:
            raise ValueError("grading strength must lie in [0, 1)")
        return cls(_mapped_nodes(size, strength), n, "graded")

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[:-1]


def _mapped_nodes(size: int, c: float) -> np.ndarray:
    xi = (np.arange(size) + 0.5) / (size - 0.5)
    r = xi - c * np.sin(2 * np.pi * xi) / (2 * np.pi)
    r[-1] = 1.0
    return r


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ValueError(f"expected {self.grid.size} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "value"])
        for r, v in zip(self.grid.nodes, self.values):
            w.writerow([repr(float(r)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n: int) -> "RadialField":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["r", "value"]:
            raise ValueError(f"unexpected header {rows[0]}")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls(RadialGrid(data[:, 0], n), data[:, 1])


def _to_banded(mat: sp.spmatrix, k: int = BANDS) -> np.ndarray:
    """Dense (2k+1, N) diagonal-ordered storage for scipy.linalg.solve_banded."""
    mat = sp.dia_matrix(mat)
    size = mat.shape[0]
    ab = np.zeros((2 * k + 1, size))
    for d in range(-k, k + 1):
        diag = mat.diagonal(d)
        if d >= 0:
            ab[k - d, d:] = diag
        else:
            ab[k - d, :size + d] = diag
    return ab


@dataclass(frozen=True, eq=False)
class DiscreteBilaplacian:
    """Clamped radial Δ² on the unknowns u_0 .. u_{N-2}; u at r = 1 is zero.

    ``band`` stores the pointwise operator V⁻¹K, ``sym_band`` the symmetric
    V^{-1/2} K V^{-1/2} used by eigen-solvers.
    """

    grid: RadialGrid
    volumes: np.ndarray
    flux: np.ndarray
    stiffness: sp.csr_matrix = field(repr=False)
    band: np.ndarray = field(repr=False)
    sym_band: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.grid.size - 1

    @property
    def weights(self) -> np.ndarray:
        """r^{n-1}-weighted cell volumes of the unknowns."""
        return self.volumes[:-1]

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self.stiffness @ u / self.weights

    def solve(self, rhs: np.ndarray, shift: np.ndarray | None = None) -> np.ndarray:
        """Solve (Δ²_h - diag(shift)) u = rhs."""
        ab = self.band.copy()
        if shift is not None:
            ab[BANDS] -= shift
        return solve_banded((BANDS, BANDS), ab, rhs)

    def dense(self) -> np.ndarray:
        return self.stiffness.toarray() / self.weights[:, None]

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        """Finite-volume Laplacian of full nodal values (r = 1 included).

        Zero flux through r = 0 and r = 1; exact for clamped fields.
        """
        f = np.asarray(values, dtype=float)
        flux = self.flux * np.diff(f)
        div = np.zeros_like(f)
        div[:-1] += flux
        div[1:] -= flux
        return div / self.volumes

    def apply_interior(self, values: np.ndarray) -> np.ndarray:
        """Δ²_h of raw samples without any boundary closure.

        Only nodes 2 .. N-3 are defined (NaN elsewhere), so arbitrary smooth
        functions, clamped or not, can be compared with exact bilaplacians.
        """
        f = np.asarray(values, dtype=float)
        lap = np.full_like(f, np.nan)
        lap[1:-1] = (self.flux[1:] * (f[2:] - f[1:-1])
                     - self.flux[:-1] * (f[1:-1] - f[:-2])) / self.volumes[1:-1]
        out = np.full_like(f, np.nan)
        out[2:-2] = (self.flux[2:-1] * (lap[3:-1] - lap[2:-2])
                     - self.flux[1:-2] * (lap[2:-2] - lap[1:-3])) / self.volumes[2:-2]
        return out

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(self.weights * u * v))


def assemble_discrete_bilaplacian(grid: RadialGrid) -> DiscreteBilaplacian:
    r, n = grid.nodes, grid.n
    if grid.size < 50:
        raise ValueError(f"assembly needs at least 50 nodes, got {grid.size}")
    faces = np.concatenate([[0.0], 0.5 * (r[1:] + r[:-1]), [1.0]])
    volumes = (faces[1:] ** n - faces[:-1] ** n) / n
    gaps = np.diff(r)
    if np.any(gaps <= 0) or np.any(volumes <= 0):
        raise ValueError("singular assembly: degenerate cells")
    flux = faces[1:-1] ** (n - 1) / gaps
    size = r.size
    # S u = net weighted outflux of each cell (Neumann at both ends)
    diag = np.zeros(size)
    diag[:-1] -= flux
    diag[1:] -= flux
    S = sp.diags([flux, diag, flux], [-1, 0, 1], shape=(size, size), format="csr")
    Sc = S[:, :-1]
    K = (Sc.T @ sp.diags(1.0 / volumes) @ Sc).tocsr()
    w = volumes[:-1]
    A = sp.diags(1.0 / w) @ K
    root = sp.diags(1.0 / np.sqrt(w))
    B = root @ K @ root
    return DiscreteBilaplacian(grid, volumes, flux, K, _to_banded(A), _to_banded(B))


@dataclass(frozen=True)
class PositivityReport:
    nodes: int
    min_entry: float
    max_entry: float
    min_relative: float
    positive: bool
    failure: str | None = None


def check_discrete_positivity(op: DiscreteBilaplacian, tol: float = 1e-10) -> PositivityReport:
    """Discrete Boggio principle: every entry of (Δ²_h)⁻¹ is non-negative."""
    if op.grid.size > 400:
        raise ValueError("dense inverse limited to grids of at most 400 nodes")
    try:
        inv = np.linalg.inv(op.dense())
    except np.linalg.LinAlgError as exc:
        return PositivityReport(op.grid.size, np.nan, np.nan, np.nan, False, str(exc))
    lo, hi = float(inv.min()), float(inv.max())
    return PositivityReport(op.grid.size, lo, hi, lo / hi, lo >= -tol)
