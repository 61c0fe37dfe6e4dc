"""Discrete obstacle problems: projected SOR, the enumeration oracle, and the
measure-datum solver that strips the singular negative part before solving.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np
import scipy.sparse.linalg as spla

from obstaclelab.grid import EllipticOperator, Grid, NodalFunction, load_vector, solve_dirichlet
from obstaclelab.measure import Measure, capacity_decompose, jordan_decompose, mutually_singular, total_variation

log = logging.getLogger(__name__)

OMEGA = 1.8
CHANGE_TOL = 1e-11
COMP_TOL = 1e-10
MAX_SWEEPS = 1_000_000


class LcpConvergenceError(RuntimeError):
    def __init__(self, message: str, sweeps: int, max_change: float, comp_residual: float):
        super().__init__(f"{message} (sweeps={sweeps}, max_change={max_change:.3e}, comp={comp_residual:.3e})")
        self.sweeps = sweeps
        self.max_change = max_change
        self.comp_residual = comp_residual


@dataclass(frozen=True, eq=False)
class Obstacle:
    """Nodal obstacle; -inf marks an unconstrained node."""

    values: np.ndarray
    description: str = "nodal"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.isnan(v).any() or np.isposinf(v).any():
            raise ValueError("obstacle values must be finite or -inf (no admissible function above +inf)")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "Obstacle":
        return cls(np.full(grid.num_interior, float(c)), f"constant {c!r}")

    @classmethod
    def unconstrained(cls, grid: Grid) -> "Obstacle":
        return cls(np.full(grid.num_interior, -np.inf), "unconstrained")

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray], description: str = "function") -> "Obstacle":
        return cls(np.asarray(fn(grid.interior_points()), dtype=float), description)

    @property
    def constrained(self) -> np.ndarray:
        return np.isfinite(self.values)


@dataclass(frozen=True, eq=False)
class LcpResult:
    u: NodalFunction
    reaction: np.ndarray
    iterations: int
    comp_residual: float
    solver: str
    max_change: float = 0.0

    def kkt(self, psi: Obstacle) -> dict[str, float]:
        """Worst violations of the three complementarity conditions."""
        c = psi.constrained
        gap = self.u.values - psi.values
        return {
            "feasibility": float(max(0.0, -gap[c].min(initial=np.inf))),
            "dual": float(max(0.0, -self.reaction.min(initial=0.0))),
            "free_reaction": float(np.abs(self.reaction[~c]).max(initial=0.0)),
            "complementarity": complementarity_product(self.reaction, gap, c),
        }


def complementarity_product(reaction: np.ndarray, gap: np.ndarray, constrained: np.ndarray) -> float:
    return float(np.abs(reaction[constrained] * gap[constrained]).max(initial=0.0))


@numba.njit(cache=True)
def _psor_kernel(indptr, indices, data, load, psi, u, omega, change_tol, comp_tol, max_sweeps):
    n = u.size
    diag = np.empty(n)
    for i in range(n):
        diag[i] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                diag[i] = data[p]
    max_change = np.inf
    comp = np.inf
    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for i in range(n):
            s = load[i]
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j != i:
                    s -= data[p] * u[j]
            new = (1.0 - omega) * u[i] + omega * s / diag[i]
            if new < psi[i]:
                new = psi[i]
            d = abs(new - u[i])
            if d > max_change:
                max_change = d
            u[i] = new
        if max_change < change_tol:
            comp = 0.0
            for i in range(n):
                if np.isfinite(psi[i]):
                    r = -load[i]
                    for p in range(indptr[i], indptr[i + 1]):
                        r += data[p] * u[indices[p]]
                    c = abs(r * (u[i] - psi[i]))
                    if c > comp:
                        comp = c
            if comp < comp_tol:
                return sweep, max_change, comp
    return -max_sweeps, max_change, comp


def _polish(op: EllipticOperator, load: np.ndarray, psi: np.ndarray, u: np.ndarray) -> np.ndarray | None:
    """Re-solve exactly on the PSOR contact set; None if the result is not a KKT point."""
    active = u <= psi
    free = ~active
    v = np.where(active, psi, 0.0)
    if free.any():
        S = op.stiffness
        rhs = load[free] - S[free][:, active] @ psi[active]
        if active.any():
            v[free] = spla.splu(S[free][:, free].tocsc()).solve(rhs)
        else:
            v = op.solve(load)
    r = op.stiffness @ v - load
    scale = 1.0 + np.abs(load).max(initial=0.0)
    if np.any(v[free] < psi[free] - 1e-12) or np.any(r[active] < -1e-12 * scale):
        return None
    return v


def solve_lcp(
    op: EllipticOperator,
    load: np.ndarray,
    psi: Obstacle,
    omega: float = OMEGA,
    change_tol: float = CHANGE_TOL,
    comp_tol: float = COMP_TOL,
    max_sweeps: int = MAX_SWEEPS,
    polish: bool = True,
) -> LcpResult:
    """Projected SOR for u >= psi, S u - m >= 0, (S u - m).(u - psi) = 0.

    Sweeps are lexicographic. The iterate starts from the unconstrained
    solution lifted onto the obstacle. After PSOR stops, the linear system is
    re-solved on its contact set; the exact solve replaces the iterate only if
    it still satisfies every KKT condition.
    """
    load = np.asarray(load, dtype=float)
    psi_v = psi.values
    if psi_v.shape != load.shape:
        raise ValueError("obstacle and load sizes differ")
    if not 0.0 < omega < 2.0:
        raise ValueError("relaxation parameter must lie in (0, 2)")
    S = op.stiffness
    u = np.maximum(op.solve(load), psi_v)
    sweeps, change, comp = _psor_kernel(
        S.indptr, S.indices, S.data, load, psi_v, u, float(omega), change_tol, comp_tol, int(max_sweeps)
    )
    if sweeps < 0:
        raise LcpConvergenceError("projected SOR did not converge", -sweeps, change, comp)
    solver = "psor"
    if polish:
        v = _polish(op, load, psi_v, u)
        if v is not None:
            u, solver = v, "psor+active-set"
        else:
            log.info("active-set polish rejected; keeping the PSOR iterate")
    reaction = S @ u - load
    comp = complementarity_product(reaction, u - psi_v, psi.constrained)
    return LcpResult(NodalFunction(op.grid, u), reaction, sweeps, comp, solver, change)


def enumerate_lcp(op: EllipticOperator, load: np.ndarray, psi: Obstacle, tol: float = 1e-12) -> LcpResult:
    """Brute-force oracle: try every contact set among the constrained nodes."""
    S = op.stiffness.toarray()
    load = np.asarray(load, dtype=float)
    c_idx = np.flatnonzero(psi.constrained)
    if c_idx.size > 16:
        raise ValueError("enumeration is limited to 16 constrained nodes")
    n = load.size
    scale = 1.0 + np.abs(load).max(initial=0.0) + np.abs(psi.values[c_idx]).max(initial=0.0)
    for k in range(c_idx.size + 1):
        for subset in itertools.combinations(c_idx, k):
            active = np.zeros(n, dtype=bool)
            active[list(subset)] = True
            free = ~active
            u = np.where(active, psi.values, 0.0)
            if free.any():
                u[free] = np.linalg.solve(S[np.ix_(free, free)], load[free] - S[np.ix_(free, active)] @ u[active])
            r = S @ u - load
            ok_primal = np.all(u[psi.constrained & free] >= psi.values[psi.constrained & free] - tol * scale)
            if ok_primal and np.all(r[active] >= -tol * scale):
                comp = complementarity_product(r, u - psi.values, psi.constrained)
                return LcpResult(NodalFunction(op.grid, u), r, k, comp, "enumeration")
    raise RuntimeError("no contact set satisfies the complementarity conditions")


# --------------------------------------------------------------------------
# obstacle problems with measure data


@dataclass(frozen=True, eq=False)
class OpResult:
    u: NodalFunction
    lambda0: np.ndarray
    singular_reaction: Measure
    regular_datum: Measure
    lcp: LcpResult
    diagnostics: dict = field(default_factory=dict)

    def total_reaction_load(self) -> np.ndarray:
        """Nodal masses of lambda0 + mu^-_s."""
        return self.lambda0 + load_vector(self.u.grid, self.singular_reaction)


def regular_datum(mu: Measure) -> tuple[Measure, Measure]:
    """Return (mu^+ - mu^-_a, mu^-_s)."""
    plus, minus = jordan_decompose(mu)
    parts = capacity_decompose(minus)
    return plus - parts.regular, parts.singular


def solve_op(op: EllipticOperator, mu: Measure, psi: Obstacle, **lcp_options) -> OpResult:
    """Obstacle problem with measure datum.

    The singular part of mu^- is absorbed by the reaction, so it is removed
    from the datum before the complementarity solve and reported back as
    the singular reaction.
    """
    reg, sing = regular_datum(mu)
    lcp = solve_lcp(op, load_vector(op.grid, reg), psi, **lcp_options)
    diagnostics = {
        "iterations": lcp.iterations,
        "comp_residual": lcp.comp_residual,
        "solver": lcp.solver,
        "lambda0_mass": float(lcp.reaction.sum()),
        "lambda0_min": float(lcp.reaction.min(initial=0.0)),
        "singular_reaction_mass": total_variation(sing),
    }
    return OpResult(lcp.u, lcp.reaction, sing, reg, lcp, diagnostics)


def solve_naive(op: EllipticOperator, mu: Measure, psi: Obstacle, **lcp_options) -> LcpResult:
    """Feed the full datum, singular atoms included, straight to the LCP."""
    return solve_lcp(op, load_vector(op.grid, mu), psi, **lcp_options)


def complementarity_residual(result: OpResult, psi: Obstacle, eps: float) -> float:
    """lambda0-mass on nodes where u > psi + eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    off = result.u.values > psi.values + eps
    return float(np.abs(result.lambda0[off]).sum())


def minimality_probe(
    op: EllipticOperator, mu: Measure, psi: Obstacle, result: OpResult, trials: int = 50, seed: int = 0
) -> float:
    """Worst excess of u over admissible competitors u_reg + u_nu, nu >= 0 random.

    Each random nu is scaled by the smallest factor that lifts u_reg + u_nu
    onto the obstacle, so competitors touch psi somewhere.
    """
    rng = np.random.default_rng(seed)
    reg, _ = regular_datum(mu)
    u_reg = solve_dirichlet(op, reg).values
    u = result.u.values
    c = psi.constrained
    worst = -np.inf
    for _ in range(trials):
        nu = rng.random(u.size) * (rng.random(u.size) < rng.uniform(0.05, 1.0))
        if not nu.any():
            nu[rng.integers(u.size)] = 1.0
        w = op.solve(nu)
        gap = psi.values[c] - u_reg[c]
        t = max(0.0, float((gap / w[c]).max(initial=0.0)))
        candidate = u_reg + t * w
        worst = max(worst, float((u - candidate).max()))
    return worst


@dataclass(frozen=True)
class ConditionCheck:
    ok: bool
    node: int | None = None
    side: str | None = None
    excess: float = 0.0

    def __bool__(self) -> bool:
        return self.ok


def condition_check(
    psi: Obstacle,
    sigma: Measure,
    tau: Measure,
    w: NodalFunction | np.ndarray,
    op: EllipticOperator,
    datum: Measure | None = None,
    tol: float = 1e-12,
) -> ConditionCheck:
    """Check -u_tau - u_sigma - w <= psi <= u_sigma nodewise.

    sigma must have no capacity-singular part; when ``datum`` is given, tau
    must be singular to the datum's singular negative part.
    """
    if not capacity_decompose(sigma).singular.is_zero():
        raise ValueError("sigma must vanish on sets of capacity zero")
    if datum is not None and not mutually_singular(tau, regular_datum(datum)[1]):
        raise ValueError("tau must be mutually singular to the singular negative part of the datum")
    wv = w.values if isinstance(w, NodalFunction) else np.asarray(w, dtype=float)
    u_sigma = solve_dirichlet(op, sigma).values
    u_tau = solve_dirichlet(op, tau).values
    lower = -u_tau - u_sigma - wv
    c = psi.constrained
    low_gap = np.where(c, lower - psi.values, -np.inf)
    up_gap = np.where(c, psi.values - u_sigma, -np.inf)
    for side, gap in (("lower", low_gap), ("upper", up_gap)):
        bad = np.flatnonzero(gap > tol)
        if bad.size:
            node = int(bad[0])
            log.warning("obstacle condition fails (%s bound) at node %d by %.3e", side, node, gap[node])
            return ConditionCheck(False, node, side, float(gap[node]))
    return ConditionCheck(True)
