"""Global maximum of a smooth scalar function on an interval: scan, then refine."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class Peak:
    argmax: float
    value: float
    bracket: tuple  # final (lo, hi) in the search variable


def scan_and_refine(f, lo: float, hi: float, points: int = 4097,
                    xtol: float = 1e-12, max_iter: int = 200) -> Peak:
    """Maximise vectorised ``f`` on [lo, hi].

    A uniform scan picks the best sample; golden-section search then shrinks
    the neighbouring bracket until it is narrower than ``xtol`` (relative to
    the interval length).  The returned value is the best sample seen, so it
    is always an attained lower bound on the maximum.
    """
    xs = np.linspace(lo, hi, points)
    ys = np.asarray(f(xs), dtype=float)
    k = int(np.nanargmax(ys))
    best_x, best_y = float(xs[k]), float(ys[k])
    a = float(xs[max(k - 1, 0)])
    b = float(xs[min(k + 1, points - 1)])
    width = xtol * (hi - lo)

    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = float(f(np.array([c]))[0]), float(f(np.array([d]))[0])
    for _ in range(max_iter):
        if b - a <= width:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = float(f(np.array([c]))[0])
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = float(f(np.array([d]))[0])
    for x, y in ((c, fc), (d, fd)):
        if y > best_y:
            best_x, best_y = x, y
    # a boundary maximum leaves the bracket pinned at the end point
    for x in (a, b):
        y = float(f(np.array([x]))[0])
        if y > best_y:
            best_x, best_y = x, y
    return Peak(best_x, best_y, (a, b))
