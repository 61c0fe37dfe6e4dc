"""P1 finite elements on a structured right-triangle mesh of a rectangle.

Interior nodes are the unknowns; boundary nodes carry the homogeneous
Dirichlet condition and are dropped from every vector and matrix.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from obstaclelab.measure import Measure, total_variation
from obstaclelab.potentials import fundamental_solution
from obstaclelab.quadrature import TRIANGLE_BARY, TRIANGLE_WEIGHTS, disk_rule, gauss_legendre

Rectangle = tuple[tuple[float, float], tuple[float, float]]
UNIT_SQUARE: Rectangle = ((0.0, 1.0), (0.0, 1.0))


# --------------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class Grid:
    """Uniform triangulation; cell (i, j) is cut along its (i,j)-(i+1,j+1) diagonal."""

    rectangle: Rectangle
    nx: int
    ny: int

    def __post_init__(self):
        (x0, x1), (y0, y1) = self.rectangle
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate rectangle {self.rectangle}")
        if self.nx < 4 or self.ny < 4:
            raise ValueError("need at least 4 subdivisions per side")
        rect = ((float(x0), float(x1)), (float(y0), float(y1)))
        object.__setattr__(self, "rectangle", rect)

    @property
    def hx(self) -> float:
        return (self.rectangle[0][1] - self.rectangle[0][0]) / self.nx

    @property
    def hy(self) -> float:
        return (self.rectangle[1][1] - self.rectangle[1][0]) / self.ny

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def n(self) -> int:
        return max(self.nx, self.ny)

    @property
    def num_interior(self) -> int:
        return (self.nx - 1) * (self.ny - 1)

    @property
    def area(self) -> float:
        (x0, x1), (y0, y1) = self.rectangle
        return (x1 - x0) * (y1 - y0)

    def node_xy(self, i, j):
        return (
            self.rectangle[0][0] + np.asarray(i) * self.hx,
            self.rectangle[1][0] + np.asarray(j) * self.hy,
        )

    def interior_index(self, i, j):
        """Row-major interior index of lattice node (i, j); -1 on the boundary."""
        i = np.asarray(i)
        j = np.asarray(j)
        inside = (i > 0) & (i < self.nx) & (j > 0) & (j < self.ny)
        return np.where(inside, (j - 1) * (self.nx - 1) + (i - 1), -1)

    def interior_lattice(self) -> tuple[np.ndarray, np.ndarray]:
        jj, ii = np.meshgrid(np.arange(1, self.ny), np.arange(1, self.nx), indexing="ij")
        return ii.ravel(), jj.ravel()

    def interior_points(self) -> np.ndarray:
        ii, jj = self.interior_lattice()
        x, y = self.node_xy(ii, jj)
        return np.stack([x, y], axis=-1)

    def boundary_lattice(self) -> list[tuple[int, int]]:
        return [
            (i, j)
            for j in range(self.ny + 1)
            for i in range(self.nx + 1)
            if i in (0, self.nx) or j in (0, self.ny)
        ]

    def elements(self) -> np.ndarray:
        """(2 nx ny, 3, 2) lattice coordinates of triangle vertices."""
        ii, jj = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        lower = np.stack([np.stack([ii, jj], -1), np.stack([ii + 1, jj], -1), np.stack([ii + 1, jj + 1], -1)], 1)
        upper = np.stack([np.stack([ii, jj], -1), np.stack([ii + 1, jj + 1], -1), np.stack([ii, jj + 1], -1)], 1)
        return np.concatenate([lower, upper], axis=0)

    def element_centroids(self) -> np.ndarray:
        el = self.elements().astype(float)
        x, y = self.node_xy(el[..., 0], el[..., 1])
        return np.stack([x.mean(axis=1), y.mean(axis=1)], axis=-1)

    def contains(self, p: Sequence[float], tol: float = 1e-12) -> bool:
        (x0, x1), (y0, y1) = self.rectangle
        return x0 - tol <= p[0] <= x1 + tol and y0 - tol <= p[1] <= y1 + tol

    def locate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vertex lattice coordinates (M, 3, 2) and barycentric weights (M, 3) of points."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        xi = (pts[:, 0] - self.rectangle[0][0]) / self.hx
        eta = (pts[:, 1] - self.rectangle[1][0]) / self.hy
        i = np.clip(np.floor(xi).astype(int), 0, self.nx - 1)
        j = np.clip(np.floor(eta).astype(int), 0, self.ny - 1)
        s, t = xi - i, eta - j
        lower = t <= s
        verts = np.empty((len(pts), 3, 2), dtype=int)
        bary = np.empty((len(pts), 3))
        verts[:, 0] = np.stack([i, j], -1)
        verts[:, 1] = np.where(lower[:, None], np.stack([i + 1, j], -1), np.stack([i + 1, j + 1], -1))
        verts[:, 2] = np.where(lower[:, None], np.stack([i + 1, j + 1], -1), np.stack([i, j + 1], -1))
        bary[:, 0] = np.where(lower, 1 - s, 1 - t)
        bary[:, 1] = np.where(lower, s - t, s)
        bary[:, 2] = np.where(lower, t, t - s)
        return verts, bary

    def hat_matrix(self, pts: np.ndarray) -> sp.csr_matrix:
        """Sparse (num_points, num_interior) matrix of hat values phi_i(p)."""
        verts, bary = self.locate(pts)
        idx = self.interior_index(verts[..., 0], verts[..., 1])
        rows = np.repeat(np.arange(len(bary)), 3)
        keep = idx.ravel() >= 0
        return sp.csr_matrix(
            (bary.ravel()[keep], (rows[keep], idx.ravel()[keep])), shape=(len(bary), self.num_interior)
        )

    def nearest_node(self, p: Sequence[float]) -> int:
        i = int(round((p[0] - self.rectangle[0][0]) / self.hx))
        j = int(round((p[1] - self.rectangle[1][0]) / self.hy))
        k = int(self.interior_index(i, j))
        if k < 0:
            raise ValueError(f"nearest node to {p} lies on the boundary")
        return k

    def nodes_in_disk(self, center: Sequence[float], r: float) -> np.ndarray:
        d = np.linalg.norm(self.interior_points() - np.asarray(center)[None, :], axis=1)
        return np.flatnonzero(d <= r + 1e-12)

    def lumped_mass(self) -> np.ndarray:
        """Integral of each interior hat function."""
        return np.full(self.num_interior, self.hx * self.hy)


def build_grid(rectangle: Rectangle = UNIT_SQUARE, n: int | tuple[int, int] = 16) -> Grid:
    nx, ny = (n, n) if isinstance(n, (int, np.integer)) else n
    return Grid(rectangle, int(nx), int(ny))


# --------------------------------------------------------------------------
# coefficients and operator


_DIRECTIONS = np.array([[1.0, 0.0], [0.0, 1.0], [1 / math.sqrt(2), 1 / math.sqrt(2)], [1 / math.sqrt(2), -1 / math.sqrt(2)]])


@dataclass(frozen=True)
class CoefficientField:
    """Matrix field a(x), sampled at element centroids.

    ``fn`` maps points (M, 2) to matrices (M, 2, 2). ``beta`` is the claimed
    ellipticity constant; when omitted it is measured on the samples.
    """

    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    beta: float | None = None
    label: str = "custom"

    @classmethod
    def identity(cls) -> "CoefficientField":
        return cls.scalar(1.0)

    @classmethod
    def scalar(cls, c: float) -> "CoefficientField":
        c = float(c)
        return cls(lambda x: c * np.broadcast_to(np.eye(2), (len(x), 2, 2)).copy(), c, f"scalar:{c!r}")

    @classmethod
    def constant(cls, matrix) -> "CoefficientField":
        m = np.asarray(matrix, dtype=float)
        return cls(lambda x: np.broadcast_to(m, (len(x), 2, 2)).copy(), None, "matrix:" + ":".join(repr(float(v)) for v in m.ravel()))

    @classmethod
    def checkerboard(cls, c1: float, c2: float, cells: int = 4) -> "CoefficientField":
        """Discontinuous scalar field alternating c1/c2 on a cells x cells board of the unit square."""

        def fn(x):
            k = (np.floor(x[:, 0] * cells) + np.floor(x[:, 1] * cells)).astype(int) % 2
            c = np.where(k == 0, c1, c2)
            return c[:, None, None] * np.eye(2)[None]

        return cls(fn, min(c1, c2), f"checker:{c1!r}:{c2!r}")

    @classmethod
    def skewed(cls, c: float, s: float) -> "CoefficientField":
        """c * identity plus the skew part s * x1 * [[0, 1], [-1, 0]].

        A constant skew part integrates to zero against interior hat
        functions, so the skew coefficient varies in x1 to make the
        stiffness genuinely nonsymmetric.
        """
        c, s = float(c), float(s)
        skew = np.array([[0.0, 1.0], [-1.0, 0.0]])

        def fn(x):
            return c * np.eye(2)[None] + s * x[:, 0, None, None] * skew[None]

        return cls(fn, c, f"skew:{c!r}:{s!r}")

    @classmethod
    def from_selector(cls, text: str) -> "CoefficientField":
        """Parse ``identity``, ``scalar:c``, ``checker:c1:c2``, ``skew:c:s`` or ``matrix:a11:a12:a21:a22``."""
        kind, *args = text.strip().split(":")
        vals = [float(a) for a in args]
        if kind == "identity" and not vals:
            return cls.identity()
        if kind == "scalar" and len(vals) == 1:
            return cls.scalar(vals[0])
        if kind == "checker" and len(vals) == 2:
            return cls.checkerboard(*vals)
        if kind == "skew" and len(vals) == 2:
            return cls.skewed(*vals)
        if kind == "matrix" and len(vals) == 4:
            return cls.constant(np.reshape(vals, (2, 2)))
        raise ValueError(f"unknown coefficient selector {text!r}")

    def sample(self, pts: np.ndarray) -> tuple[np.ndarray, float]:
        a = np.asarray(self.fn(pts), dtype=float)
        if a.shape != (len(pts), 2, 2) or not np.isfinite(a).all():
            raise ValueError("coefficient field must return finite (M, 2, 2) matrices")
        quad = np.einsum("ki,mij,kj->mk", _DIRECTIONS, a, _DIRECTIONS)
        measured = float(quad.min())
        beta = measured if self.beta is None else self.beta
        if beta <= 0 or measured < beta * (1 - 1e-12):
            raise ValueError(f"ellipticity violated: min xi.a.xi = {measured}, required beta = {beta}")
        return a, beta


class EllipticOperator:
    """Assembled stiffness for -div(a grad u) with a cached sparse LU."""

    def __init__(self, grid: Grid, stiffness: sp.csr_matrix, coefficients: CoefficientField, beta: float):
        self.grid = grid
        self.stiffness = stiffness
        self.adjoint = stiffness.T.tocsr()
        self.coefficients = coefficients
        self.beta = beta
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            self._lu = spla.splu(self.stiffness.tocsc())
        return self._lu

    def solve(self, rhs: np.ndarray, adjoint: bool = False) -> np.ndarray:
        return self.lu.solve(np.asarray(rhs, dtype=float), trans="T" if adjoint else "N")

    @property
    def is_symmetric(self) -> bool:
        return (abs(self.stiffness - self.adjoint)).max() == 0

    def __repr__(self) -> str:
        return f"EllipticOperator(nx={self.grid.nx}, ny={self.grid.ny}, coefficients={self.coefficients.label})"


def _element_gradients(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric gradients for lower and upper reference triangles, shape (3, 2)."""
    hx, hy = grid.hx, grid.hy
    lower = np.array([[-1 / hx, 0.0], [1 / hx, -1 / hy], [0.0, 1 / hy]])
    upper = np.array([[0.0, -1 / hy], [1 / hx, 0.0], [-1 / hx, 1 / hy]])
    return lower, upper


def assemble(grid: Grid, a: CoefficientField | None = None) -> EllipticOperator:
    """P1 stiffness S[i, j] = int grad(phi_i) . a grad(phi_j) over interior nodes."""
    a = a or CoefficientField.identity()
    el = grid.elements()
    coeffs, beta = a.sample(grid.element_centroids())
    ncell = grid.nx * grid.ny
    lower, upper = _element_gradients(grid)
    grads = np.concatenate([np.broadcast_to(lower, (ncell, 3, 2)), np.broadcast_to(upper, (ncell, 3, 2))])
    area = 0.5 * grid.hx * grid.hy
    local = area * np.einsum("eai,eij,ebj->eab", grads, coeffs, grads)
    idx = grid.interior_index(el[..., 0], el[..., 1])
    rows = np.repeat(idx[:, :, None], 3, axis=2)
    cols = np.repeat(idx[:, None, :], 3, axis=1)
    keep = (rows >= 0) & (cols >= 0)
    S = sp.coo_matrix((local[keep], (rows[keep], cols[keep])), shape=(grid.num_interior,) * 2).tocsr()
    S.sum_duplicates()
    S.eliminate_zeros()
    return EllipticOperator(grid, S, a, beta)


# --------------------------------------------------------------------------
# nodal functions


@dataclass(frozen=True, eq=False)
class NodalFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.num_interior,):
            raise ValueError("nodal values must have one entry per interior node")
        object.__setattr__(self, "values", v)

    def __call__(self, pts) -> np.ndarray:
        """P1 interpolant at points (zero on the boundary)."""
        return self.grid.hat_matrix(np.atleast_2d(pts)) @ self.values

    def __sub__(self, other: "NodalFunction") -> "NodalFunction":
        return NodalFunction(self.grid, self.values - other.values)

    def __add__(self, other: "NodalFunction") -> "NodalFunction":
        return NodalFunction(self.grid, self.values + other.values)

    def max_abs(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))

    def l1_norm(self) -> float:
        return float(np.dot(self.grid.lumped_mass(), np.abs(self.values)))

    def ball_average(self, center: Sequence[float], r: float) -> float:
        pts, wts = disk_rule(center, r)
        return float(np.dot(wts, self(pts)) / wts.sum())

    def to_csv(self, path: str | Path | None = None, header: dict | None = None, name: str = "value") -> str:
        text = nodal_csv(self.grid, {name: self.values}, header)
        if path is not None:
            Path(path).write_text(text)
        return text


def nodal_csv(grid: Grid, columns: dict[str, np.ndarray], header: dict | None = None) -> str:
    buf = io.StringIO()
    meta = {
        "rectangle": " ".join(repr(v) for b in grid.rectangle for v in b),
        "nx": grid.nx,
        "ny": grid.ny,
        "h": repr(grid.h),
    }
    meta.update(header or {})
    for k, v in meta.items():
        buf.write(f"# {k} = {v}\n")
    buf.write(",".join(["x", "y", *columns]) + "\n")
    pts = grid.interior_points()
    cols = [np.asarray(c, dtype=float) for c in columns.values()]
    for p, *vals in zip(pts, *cols):
        buf.write(",".join(repr(float(v)) for v in (p[0], p[1], *vals)) + "\n")
    return buf.getvalue()


# --------------------------------------------------------------------------
# loads and solves


def _segment_element_pieces(grid: Grid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Parameters in [0, 1] cutting segment [a, b] at grid lines and diagonals."""
    (x0, _), (y0, _) = grid.rectangle
    pa = np.array([(a[0] - x0) / grid.hx, (a[1] - y0) / grid.hy])
    pb = np.array([(b[0] - x0) / grid.hx, (b[1] - y0) / grid.hy])
    d = pb - pa
    ts = [0.0, 1.0]
    for comp, delta in ((pa[0], d[0]), (pa[1], d[1]), (pa[0] - pa[1], d[0] - d[1])):
        if delta != 0.0:
            lo, hi = sorted((comp, comp + delta))
            k = np.arange(math.ceil(lo), math.floor(hi) + 1)
            ts.extend(((k - comp) / delta).tolist())
    return np.unique(np.clip(ts, 0.0, 1.0))


def load_vector(grid: Grid, mu: Measure) -> np.ndarray:
    """Nodal loads m_i = mu(phi_i)."""
    if mu.dimension != 2:
        raise ValueError("grid loads need a planar measure")
    m = np.zeros(grid.num_interior)
    if mu.atoms:
        locs = np.array([at.location for at in mu.atoms])
        for p in locs:
            if not grid.contains(p):
                raise ValueError(f"atom at {tuple(p)} lies outside the grid rectangle")
        m += grid.hat_matrix(locs).T @ np.array([at.mass for at in mu.atoms])
    if mu.curves:
        t, w = gauss_legendre(2)
        pts, wts = [], []
        for piece in mu.curves:
            for a, b in piece.segments():
                if not (grid.contains(a) and grid.contains(b)):
                    raise ValueError("curve piece leaves the grid rectangle")
                cuts = _segment_element_pieces(grid, a, b)
                length = float(np.linalg.norm(b - a))
                lo, dt = cuts[:-1], np.diff(cuts)
                tt = (lo[:, None] + dt[:, None] * t[None, :]).ravel()
                pts.append(a[None, :] + tt[:, None] * (b - a)[None, :])
                wts.append(piece.linear_density * length * (dt[:, None] * w[None, :]).ravel())
        m += grid.hat_matrix(np.concatenate(pts)).T @ np.concatenate(wts)
    if mu.density is not None:
        m += _density_load(grid, mu)
    return m


def _density_load(grid: Grid, mu: Measure) -> np.ndarray:
    el = grid.elements().astype(float)
    vx, vy = grid.node_xy(el[..., 0], el[..., 1])
    verts = np.stack([vx, vy], axis=-1)  # (E, 3, 2)
    qp = np.einsum("qa,ead->eqd", TRIANGLE_BARY, verts)  # (E, Q, 2)
    area = 0.5 * grid.hx * grid.hy
    f = mu.density(qp.reshape(-1, 2)).reshape(qp.shape[:2])
    # contribution of quadrature point q to vertex a: area * w_q * f * bary_qa
    local = area * np.einsum("q,eq,qa->ea", TRIANGLE_WEIGHTS, f, TRIANGLE_BARY)
    idx = grid.interior_index(el[..., 0].astype(int), el[..., 1].astype(int))
    keep = idx >= 0
    return np.bincount(idx[keep], weights=local[keep], minlength=grid.num_interior)


class SolveError(RuntimeError):
    pass


def solve_dirichlet(op: EllipticOperator, mu: Measure | np.ndarray) -> NodalFunction:
    """Discrete Stampacchia solution: stiffness . u = mu(phi)."""
    m = mu if isinstance(mu, np.ndarray) else load_vector(op.grid, mu)
    try:
        u = op.solve(m)
    except RuntimeError as exc:  # pragma: no cover - splu raises on singular matrices
        raise SolveError(f"factorisation failed: {exc}") from exc
    scale = np.linalg.norm(m)
    if scale > 0 and np.linalg.norm(op.stiffness @ u - m) > 1e-10 * scale:
        raise SolveError("direct solve left a large residual")
    return NodalFunction(op.grid, u)


def relative_residual(op: EllipticOperator, u: NodalFunction, m: np.ndarray) -> float:
    scale = np.linalg.norm(m)
    return float(np.linalg.norm(op.stiffness @ u.values - m) / scale) if scale > 0 else 0.0


def discrete_green(op: EllipticOperator, y: Sequence[float]) -> NodalFunction:
    return solve_dirichlet(op, Measure.dirac(y, 1.0, domain=op.grid.rectangle))


@dataclass(frozen=True)
class GreenBounds:
    c1: float
    c2: float
    d1: float
    d2: float
    pairs: int
    nearest_ratios: tuple[float, float]

    @property
    def ok(self) -> bool:
        return self.c1 > 0 and math.isfinite(self.c2)


def check_green_bounds(op: EllipticOperator, K: Rectangle, max_sources: int = 400) -> GreenBounds:
    """Empirical comparison of the discrete Green function with G(|x - y|) on K.

    Ratios (G_A(x, y) + d) / (G(|x - y|) + d') over node pairs in K with
    2h <= |x - y| <= diam(K)/2. d = 0 because interior Green values are
    positive; d' lifts the logarithmic kernel above zero on K.
    """
    grid = op.grid
    pts = grid.interior_points()
    (kx0, kx1), (ky0, ky1) = K
    inK = np.flatnonzero((pts[:, 0] >= kx0) & (pts[:, 0] <= kx1) & (pts[:, 1] >= ky0) & (pts[:, 1] <= ky1))
    if inK.size < 2:
        raise ValueError("K contains fewer than two interior nodes")
    step = max(1, math.ceil(inK.size / max_sources))
    sources = inK[::step]
    diam = math.hypot(kx1 - kx0, ky1 - ky0)
    d_kernel = max(0.0, 1e-12 - fundamental_solution(2, 0.5 * diam))
    rhs = np.zeros((grid.num_interior, sources.size))
    rhs[sources, np.arange(sources.size)] = 1.0
    cols = op.solve(rhs)
    xK = pts[inK]
    lo, hi = 2 * grid.h * (1 - 1e-12), 0.5 * diam
    ratios, dists = [], []
    for c, s in enumerate(sources):
        r = np.linalg.norm(xK - pts[s][None, :], axis=1)
        sel = (r >= lo) & (r <= hi)
        if not sel.any():
            continue
        ga = cols[inK[sel], c]
        ratios.append(ga / (fundamental_solution(2, r[sel]) + d_kernel))
        dists.append(r[sel])
    ratios = np.concatenate(ratios)
    dists = np.concatenate(dists)
    near = ratios[dists <= dists.min() * (1 + 1e-9)]
    return GreenBounds(
        float(ratios.min()), float(ratios.max()), 0.0, d_kernel, int(ratios.size), (float(near.min()), float(near.max()))
    )


def duality_check(op: EllipticOperator, mu: Measure, g: NodalFunction | np.ndarray) -> float:
    """|int u_mu g dx - int u*_g dmu| with lumped mass and hat-function pairing."""
    gv = g.values if isinstance(g, NodalFunction) else np.asarray(g, dtype=float)
    m = load_vector(op.grid, mu)
    mass = op.grid.lumped_mass()
    u = op.solve(m)
    u_star = op.solve(mass * gv, adjoint=True)
    lhs = float(np.dot(mass * u, gv))
    rhs = float(np.dot(u_star, m))
    return abs(lhs - rhs)


def duality_bound(mu: Measure, g: NodalFunction | np.ndarray) -> float:
    gv = g.values if isinstance(g, NodalFunction) else np.asarray(g, dtype=float)
    return 1e-10 * (1 + float(np.abs(gv).max(initial=0.0))) * total_variation(mu)


def truncate(u: np.ndarray, k: float) -> np.ndarray:
    return np.clip(u, -k, k)


def truncation_energy(op: EllipticOperator, u: NodalFunction | np.ndarray, k: float) -> float:
    """beta * |grad T_k(u)|^2 integrated, with nodal truncation."""
    if k <= 0:
        raise ValueError("truncation level must be positive")
    uv = u.values if isinstance(u, NodalFunction) else np.asarray(u, dtype=float)
    t = truncate(uv, k)
    lap = laplacian(op.grid)
    return float(op.beta * t @ (lap @ t))


_LAPLACIANS: dict[Grid, sp.csr_matrix] = {}


def laplacian(grid: Grid) -> sp.csr_matrix:
    """Identity-coefficient stiffness on ``grid`` (cached)."""
    L = _LAPLACIANS.get(grid)
    if L is None:
        L = assemble(grid).stiffness
        _LAPLACIANS[grid] = L
    return L


def estimate_capacity(grid: Grid, E: Iterable[int]) -> float:
    """min v.L.v over nodal v with v = 1 on E and v = 0 on the boundary."""
    E = np.unique(np.fromiter(E, dtype=int))
    if E.size == 0:
        return 0.0
    L = laplacian(grid)
    free = np.ones(grid.num_interior, dtype=bool)
    free[E] = False
    v = np.zeros(grid.num_interior)
    v[E] = 1.0
    if free.any():
        LFF = L[free][:, free].tocsc()
        v[free] = spla.spsolve(LFF, -(L[free][:, E] @ np.ones(E.size)))
    return float(v @ (L @ v))
