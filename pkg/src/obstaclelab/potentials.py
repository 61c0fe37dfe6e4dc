"""Mesh-free Newtonian / logarithmic potentials of measures and ball averages."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from obstaclelab.measure import Measure, density_rule, mutually_singular
from obstaclelab.quadrature import ADAPTIVE_TOL, adaptive_integrate

# distance below which the projection of the evaluation point splits a panel
SINGULAR_SPLIT = 1e-3

_SIGMA = {3: 4.0 * math.pi}  # surface measure of the unit sphere in R^3


def _check_dim(n: int) -> None:
    if n not in (2, 3):
        raise ValueError(f"unsupported dimension {n}")


def _kernel(n: int, s: np.ndarray) -> np.ndarray:
    if n == 2:
        return np.log(1.0 / s) / (2.0 * math.pi)
    return 1.0 / ((n - 2) * _SIGMA[n] * s ** (n - 2))


def fundamental_solution(n: int, r):
    """Fundamental solution of -Laplace in R^n as a function of |x|.

    >>> round(fundamental_solution(3, 1.0), 6)
    0.079577
    """
    _check_dim(n)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("fundamental solution needs r > 0")
    out = _kernel(n, r_arr)
    return float(out) if out.ndim == 0 else out


def _averaged(n: int, r: float, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    inside = s < r
    safe = np.where(inside, r, s)
    out = _kernel(n, safe)
    if n == 3:
        core = (3.0 * r * r - s * s) / (8.0 * math.pi * r**3)
    else:
        core = (math.log(1.0 / r) + 0.5 * (1.0 - (s / r) ** 2)) / (2.0 * math.pi)
    return np.where(inside, core, out)


def averaged_kernel(n: int, r: float, s):
    """Mean of G(|y - z|) over y in a ball of radius r whose centre is at distance s from z."""
    _check_dim(n)
    if r <= 0:
        raise ValueError("ball radius must be positive")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("distance must be non-negative")
    out = _averaged(n, r, s_arr)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# line integrals over curve pieces


def _segment_geometry(a: np.ndarray, b: np.ndarray, x: np.ndarray):
    d = b - a
    length = float(np.linalg.norm(d))
    e = d / length
    foot = float(np.clip(np.dot(x - a, e), 0.0, length))
    dist = float(np.linalg.norm(a + foot * e - x))
    return e, length, foot, dist


def _segment_integral(
    profile: Callable[[np.ndarray], np.ndarray],
    a: np.ndarray,
    b: np.ndarray,
    x: np.ndarray,
    extra_radius: float | None = None,
    tol: float = ADAPTIVE_TOL,
) -> float:
    """Integrate profile(|x - gamma(t)|) over arc length of the segment [a, b]."""
    e, length, foot, dist = _segment_geometry(a, b, x)
    breaks = []
    if dist < SINGULAR_SPLIT:
        breaks.append(foot)
    if extra_radius is not None:
        # arc-length parameters where the distance to x crosses extra_radius
        t0 = float(np.dot(x - a, e))
        perp2 = max(float(np.dot(x - a, x - a)) - t0 * t0, 0.0)
        if extra_radius**2 > perp2:
            half = math.sqrt(extra_radius**2 - perp2)
            breaks += [t0 - half, t0 + half]

    def f(t: np.ndarray) -> np.ndarray:
        pts = a[None, :] + t[:, None] * e[None, :]
        return profile(np.linalg.norm(pts - x[None, :], axis=1))

    return adaptive_integrate(f, 0.0, length, tol=tol, breaks=breaks)


def _signed_inf(values: list[float]) -> float:
    signs = {math.copysign(1.0, v) for v in values}
    if len(signs) > 1:
        return math.nan
    return signs.pop() * math.inf


def potential(mu: Measure, x: Sequence[float]) -> float:
    """G mu(x); returns +-inf when x sits on a carrier with a divergent kernel."""
    n = mu.dimension
    x = np.asarray(x, dtype=float)
    infinities: list[float] = []
    total = 0.0
    for atom in mu.atoms:
        s = float(np.linalg.norm(np.asarray(atom.location) - x))
        if s == 0.0:
            infinities.append(atom.mass)
        else:
            total += atom.mass * float(_kernel(n, np.asarray(s)))
    for piece in mu.curves:
        for a, b in piece.segments():
            _, _, _, dist = _segment_geometry(a, b, x)
            if dist == 0.0 and n == 3:
                infinities.append(piece.linear_density)
                continue
            total += piece.linear_density * _segment_integral(lambda s: _kernel(n, s), a, b, x)
    if mu.density is not None:
        pts, wts = density_rule(mu, point=x)
        s = np.linalg.norm(pts - x[None, :], axis=1)
        total += float(np.dot(wts, _kernel(n, s) * mu.density(pts)))
    if infinities:
        return _signed_inf(infinities)
    return total


def ball_average_potential(mu: Measure, x: Sequence[float], r: float) -> float:
    """Mean of G mu over the ball B_r(x), evaluated carrier by carrier."""
    if r <= 0:
        raise ValueError("ball radius must be positive")
    n = mu.dimension
    x = np.asarray(x, dtype=float)
    total = 0.0
    for atom in mu.atoms:
        s = np.linalg.norm(np.asarray(atom.location) - x)
        total += atom.mass * float(_averaged(n, r, s))
    for piece in mu.curves:
        for a, b in piece.segments():
            total += piece.linear_density * _segment_integral(
                lambda s: _averaged(n, r, s), a, b, x, extra_radius=r
            )
    if mu.density is not None:
        pts, wts = density_rule(mu, point=x)
        s = np.linalg.norm(pts - x[None, :], axis=1)
        total += float(np.dot(wts, _averaged(n, r, s) * mu.density(pts)))
    return total


# --------------------------------------------------------------------------
# ratio scans


@dataclass(frozen=True)
class RatioScan:
    center: tuple[float, ...]
    radii: tuple[float, ...]
    numerator_averages: tuple[float, ...]
    denominator_averages: tuple[float, ...]
    ratios: tuple[float, ...]

    def rows(self):
        return zip(self.radii, self.numerator_averages, self.denominator_averages, self.ratios)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        buf.write("# center = " + " ".join(repr(c) for c in self.center) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "num_avg", "den_avg", "ratio"])
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def decay_exponent(self) -> float:
        """Least-squares slope of log(ratio) against log(radius)."""
        r = np.log(self.radii)
        q = np.log(self.ratios)
        return float(np.polyfit(r, q, 1)[0])

    def strictly_decreasing(self) -> bool:
        q = np.asarray(self.ratios)
        return bool(np.all(np.diff(q) < 0))


def ratio_scan(mu: Measure, nu: Measure, x: Sequence[float], radii: Sequence[float]) -> RatioScan:
    """Ball averages of G nu over ball averages of G mu on a shrinking ladder of radii."""
    radii = tuple(float(r) for r in radii)
    if not radii or any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii[:-1], radii[1:])):
        raise ValueError("radii must be positive and strictly decreasing")
    for m in (mu, nu):
        if not m.is_nonnegative():
            raise ValueError("ratio scans need non-negative measures")
    if not mutually_singular(mu, nu):
        raise ValueError("ratio scans need mutually singular measures")
    num = tuple(ball_average_potential(nu, x, r) for r in radii)
    den = tuple(ball_average_potential(mu, x, r) for r in radii)
    if any(d == 0.0 for d in den):
        raise ValueError("a denominator ball average vanished")
    ratios = tuple(a / b for a, b in zip(num, den))
    return RatioScan(tuple(float(c) for c in x), radii, num, den, ratios)
