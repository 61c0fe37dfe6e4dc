"""Seeded randomized checks: duality, LCP oracle, minimality, convergence order, truncation energy.

Each suite returns the raw per-instance numbers together with a Verdict, so
callers can print the verdict and still inspect the distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from obstaclelab.experiments import Verdict
from obstaclelab.grid import (
    UNIT_SQUARE,
    CoefficientField,
    assemble,
    build_grid,
    duality_bound,
    duality_check,
    solve_dirichlet,
    truncation_energy,
)
from obstaclelab.measure import Atom, CurvePiece, Density, Measure, total_variation
from obstaclelab.obstacle import Obstacle, enumerate_lcp, minimality_probe, solve_lcp, solve_op


@dataclass
class SuiteResult:
    values: np.ndarray
    verdict: Verdict

    @property
    def passed(self) -> bool:
        return self.verdict.passed


def random_coefficients(rng: np.random.Generator) -> CoefficientField:
    """One of: identity, scalar, checkerboard, constant anisotropic matrix, variable skew part."""
    kind = rng.integers(5)
    if kind == 0:
        return CoefficientField.identity()
    if kind == 1:
        return CoefficientField.scalar(float(rng.uniform(0.5, 3.0)))
    if kind == 2:
        return CoefficientField.checkerboard(float(rng.uniform(0.5, 2.0)), float(rng.uniform(2.0, 5.0)))
    if kind == 3:
        return CoefficientField.skewed(float(rng.uniform(0.5, 2.0)), float(rng.uniform(-1.0, 1.0)))
    a11, a22 = rng.uniform(1.0, 2.0, size=2)
    skew = float(rng.uniform(-0.4, 0.4))
    sym = float(rng.uniform(-0.2, 0.2))
    return CoefficientField.constant([[a11, sym + skew], [sym - skew, a22]])


def random_measure(rng: np.random.Generator, atoms: int = 2, curves: int = 1, density: bool = True) -> Measure:
    """Signed planar measure with atoms, straight curve pieces and an affine or sine density."""
    at = tuple(Atom(tuple(rng.uniform(0.1, 0.9, size=2)), float(rng.choice([-1, 1]) * rng.uniform(0.2, 1.0)))
               for _ in range(atoms))
    cv = tuple(
        CurvePiece((tuple(rng.uniform(0.1, 0.9, size=2)), tuple(rng.uniform(0.1, 0.9, size=2))),
                   float(rng.uniform(-1.0, 1.0)))
        for _ in range(curves)
    )
    dens = None
    if density:
        if rng.random() < 0.5:
            dens = Density.affine(*rng.uniform(-1.0, 1.0, size=3))
        else:
            dens = Density.sine(float(rng.uniform(-2.0, 2.0)))
    return Measure(2, at, cv, dens)


def duality_suite(trials: int = 20, n: int = 32, seed: int = 0) -> SuiteResult:
    """|int u_mu g - int u*_g dmu| relative to 1e-10 (1 + |g|_inf) |mu|(Omega)."""
    rng = np.random.default_rng(seed)
    grid = build_grid(UNIT_SQUARE, n)
    ratios = []
    for _ in range(trials):
        op = assemble(grid, random_coefficients(rng))
        mu = random_measure(rng)
        g = rng.uniform(-1.0, 1.0, size=grid.num_interior)
        ratios.append(duality_check(op, mu, g) / duality_bound(mu, g))
    r = np.array(ratios)
    return SuiteResult(r, Verdict("C7", "duality_identity", bool(np.all(r <= 1.0)),
                                  f"worst residual / bound = {r.max():.3g} over {trials} pairs"))


def oracle_suite(trials: int = 20, seed: int = 0) -> SuiteResult:
    """PSOR against brute-force contact-set enumeration on 3 x 3 interior grids."""
    rng = np.random.default_rng(seed)
    grid = build_grid(UNIT_SQUARE, 4)
    diffs = []
    for _ in range(trials):
        op = assemble(grid, random_coefficients(rng))
        load = rng.normal(scale=grid.h**2 * 5.0, size=grid.num_interior)
        psi_v = rng.uniform(-0.2, 0.1, size=grid.num_interior)
        psi_v[rng.random(grid.num_interior) < 0.2] = -np.inf
        psi = Obstacle(psi_v, "random")
        a = solve_lcp(op, load, psi)
        b = enumerate_lcp(op, load, psi)
        diffs.append(float(np.abs(a.u.values - b.u.values).max()))
    d = np.array(diffs)
    return SuiteResult(d, Verdict("C8", "lcp_oracle", bool(np.all(d <= 1e-10)),
                                  f"max |u_psor - u_enum| = {d.max():.3g} over {trials} instances"))


def minimality_instance(n: int = 32):
    """Signed density with a negative atom under a flat obstacle, so the contact set is nonempty."""
    grid = build_grid(UNIT_SQUARE, n)
    op = assemble(grid)
    mu = Measure.from_density(Density.affine(-4.0, 6.0, 0.0)) + Measure.dirac((0.3, 0.7), -1.0)
    psi = Obstacle.constant(grid, -0.05)
    return op, mu, psi


def minimality_suite(trials: int = 50, n: int = 32, seed: int = 0) -> SuiteResult:
    op, mu, psi = minimality_instance(n)
    res = solve_op(op, mu, psi)
    worst = minimality_probe(op, mu, psi, res, trials=trials, seed=seed)
    contact = int(np.sum(res.u.values <= psi.values + 1e-12))
    return SuiteResult(np.array([worst]), Verdict("C9", "minimality", worst <= 1e-9,
                                                  f"worst violation {worst:.3g} over {trials} candidates, "
                                                  f"{contact} contact nodes"))


def manufactured_order(sizes=(32, 64, 128, 256)) -> SuiteResult:
    """Nodal L-infinity error for u = sin(pi x) sin(pi y), -Laplace u = 2 pi^2 u."""
    errors = []
    mu = Measure.from_density(Density.sine(2.0 * math.pi**2))
    for n in sizes:
        grid = build_grid(UNIT_SQUARE, n)
        u = solve_dirichlet(assemble(grid), mu)
        exact = np.prod(np.sin(math.pi * grid.interior_points()), axis=1)
        errors.append(float(np.abs(u.values - exact).max()))
    ratios = np.array([a / b for a, b in zip(errors[:-1], errors[1:])])
    ok = bool(np.all((ratios >= 3.5) & (ratios <= 4.5)))
    return SuiteResult(ratios, Verdict("C10", "manufactured_order", ok,
                                       "error ratios " + ", ".join(f"{r:.4f}" for r in ratios) + " (band 3.5..4.5)"))


def truncation_suite(trials: int = 20, n: int = 32, seed: int = 0) -> SuiteResult:
    """beta |grad T_k(u_mu)|^2 against k |mu|(Omega) for random data and coefficients.

    Ratios above 1.01 count as violations; the suite fails when any ratio
    exceeds 1.05.
    """
    rng = np.random.default_rng(seed)
    grid = build_grid(UNIT_SQUARE, n)
    ratios = []
    for _ in range(trials):
        op = assemble(grid, random_coefficients(rng))
        mu = random_measure(rng, atoms=int(rng.integers(0, 3)))
        u = solve_dirichlet(op, mu)
        k = float(rng.uniform(0.2, 1.0)) * max(u.max_abs(), 1e-12)
        ratios.append(truncation_energy(op, u, k) / (k * total_variation(mu)))
    r = np.array(ratios)
    violations = int(np.sum(r > 1.01))
    return SuiteResult(r, Verdict("C12", "truncation_energy", bool(np.all(r <= 1.05)),
                                  f"max ratio {r.max():.4f}, {violations} above 1.01 of {trials}"))
