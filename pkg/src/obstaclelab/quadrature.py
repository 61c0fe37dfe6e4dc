"""Quadrature rules shared by the measure, potential and grid modules."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

# per-panel rule for the adaptive line integrator
PANEL_ORDER = 8
ADAPTIVE_TOL = 1e-10
MAX_PANELS = 200_000
# panels shorter than this fraction of the interval are accepted as they are;
# an integrable endpoint singularity contributes O(h log h) there
MIN_PANEL = 1e-13


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def axis_breaks(lo: float, hi: float, cells: int, extra: Sequence[float] = ()) -> np.ndarray:
    """Uniform break points on [lo, hi] with `extra` points inserted when interior."""
    pts = np.linspace(lo, hi, cells + 1)
    inner = [e for e in extra if lo < e < hi]
    if inner:
        pts = np.unique(np.concatenate([pts, inner]))
    return pts


def composite_1d(breaks: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = gauss_legendre(order)
    lengths = np.diff(breaks)
    x = (breaks[:-1, None] + lengths[:, None] * t[None, :]).ravel()
    wt = (lengths[:, None] * w[None, :]).ravel()
    return x, wt


def tensor_rule(
    bounds: Sequence[tuple[float, float]],
    cells: int,
    order: int,
    point: Sequence[float] | None = None,
    grading: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite tensor Gauss rule on a box.

    When `point` is given its coordinates become cell faces, so a kernel
    singular at `point` is never sampled there and each cell sees the
    singularity only at a corner or a face. `grading` adds that many
    geometrically shrinking faces (ratio 1/2) on each side of the point,
    which restores fast convergence for a logarithmic singularity.
    """
    axes = []
    for d, (lo, hi) in enumerate(bounds):
        extra: tuple[float, ...] = ()
        if point is not None:
            p = float(point[d])
            step = (hi - lo) / cells
            offsets = [step * 2.0**-j for j in range(1, grading + 1)]
            extra = (p, *(p - o for o in offsets), *(p + o for o in offsets))
        axes.append(composite_1d(axis_breaks(lo, hi, cells, extra), order))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts, wts


def adaptive_integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = ADAPTIVE_TOL,
    breaks: Sequence[float] = (),
) -> float:
    """Adaptive composite Gauss rule with recursive bisection.

    `f` is vectorised over parameter values. Each panel is accepted when the
    single-panel estimate and the two-half estimate agree to within the
    panel's share of `tol`. `breaks` are forced panel endpoints (kinks or
    integrable singularities of the integrand).
    """
    if b <= a:
        return 0.0
    t, w = gauss_legendre(PANEL_ORDER)
    edges = [a] + sorted(x for x in set(breaks) if a < x < b) + [b]
    total_len = b - a
    stack = [(lo, hi) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
    result = 0.0
    panels = 0

    def panel(lo: float, hi: float) -> float:
        h = hi - lo
        return float(h * np.dot(w, f(lo + h * t)))

    cache = {p: panel(*p) for p in stack}
    while stack:
        lo, hi = stack.pop()
        whole = cache.pop((lo, hi))
        mid = 0.5 * (lo + hi)
        left, right = panel(lo, mid), panel(mid, hi)
        panels += 1
        share = tol * (hi - lo) / total_len
        tiny = hi - lo < MIN_PANEL * total_len
        if abs(left + right - whole) <= share or tiny or panels > MAX_PANELS:
            result += left + right
        else:
            cache[(lo, mid)] = left
            cache[(mid, hi)] = right
            stack.append((lo, mid))
            stack.append((mid, hi))
    return result


# Strang-Fix six-point rule, exact for degree 4 on a triangle.
_TRI_A, _TRI_B = 0.445948490915965, 0.091576213509771
_TRI_WA, _TRI_WB = 0.223381589678011, 0.109951743655322
TRIANGLE_BARY = np.array(
    [
        [1 - 2 * _TRI_A, _TRI_A, _TRI_A],
        [_TRI_A, 1 - 2 * _TRI_A, _TRI_A],
        [_TRI_A, _TRI_A, 1 - 2 * _TRI_A],
        [1 - 2 * _TRI_B, _TRI_B, _TRI_B],
        [_TRI_B, 1 - 2 * _TRI_B, _TRI_B],
        [_TRI_B, _TRI_B, 1 - 2 * _TRI_B],
    ]
)
# weights normalised to sum to one (multiply by the triangle area)
TRIANGLE_WEIGHTS = np.array([_TRI_WA] * 3 + [_TRI_WB] * 3)


def disk_rule(center: Sequence[float], r: float, n_radial: int = 12, n_angular: int = 48):
    """Polar product rule on the disk B_r(center); weights sum to pi r^2."""
    t, w = gauss_legendre(n_radial)
    rho = r * t
    theta = 2 * np.pi * (np.arange(n_angular) + 0.5) / n_angular
    R, TH = np.meshgrid(rho, theta, indexing="ij")
    W = (r * w * rho)[:, None] * np.full(n_angular, 2 * np.pi / n_angular)[None, :]
    pts = np.stack([center[0] + R.ravel() * np.cos(TH.ravel()), center[1] + R.ravel() * np.sin(TH.ravel())], axis=-1)
    return pts, W.ravel()
