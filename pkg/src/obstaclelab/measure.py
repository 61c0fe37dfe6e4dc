"""Bounded Radon measures built from a diffuse density, atoms and curve pieces.

A :class:`Measure` is an immutable value. Its carriers are kept apart by
type, which is what makes the Jordan split, the capacity split and the
mutual-singularity test decidable from the representation alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from obstaclelab.quadrature import tensor_rule

Point = tuple[float, ...]

# tensor quadrature used for density integrals: cells per side, Gauss order
DENSITY_CELLS = {2: 32, 3: 12}
DENSITY_ORDER = 4
# graded faces around an evaluation point; the planar log kernel needs them
DENSITY_GRADING = {2: 10, 3: 0}
# sampling resolution (cell midpoints per side) for support intersection
SUPPORT_SAMPLES = {2: 128, 3: 32}
_GEOM_TOL = 1e-12


def _as_point(p: Iterable[float]) -> Point:
    return tuple(float(c) for c in p)


# --------------------------------------------------------------------------
# densities


@dataclass(frozen=True, eq=False)
class Density:
    """A signed density with respect to Lebesgue measure.

    Densities form a small expression tree so that they can be written to and
    read back from the measure text format. Leaves are ``constant``,
    ``affine``, ``sine`` and ``samples``; ``sum``, ``scaled``, ``pos`` and
    ``neg`` combine them. ``callable`` wraps an arbitrary vectorised function
    and is the one kind that does not serialise.
    """

    kind: str
    params: tuple = ()
    children: tuple["Density", ...] = ()
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    # constructors -----------------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "Density":
        return cls("constant", (float(c),))

    @classmethod
    def affine(cls, c0: float, *grad: float) -> "Density":
        """c0 + grad . x"""
        return cls("affine", (float(c0),) + tuple(float(g) for g in grad))

    @classmethod
    def sine(cls, amplitude: float) -> "Density":
        """amplitude * prod_d sin(pi x_d)"""
        return cls("sine", (float(amplitude),))

    @classmethod
    def samples(cls, bounds: Sequence[tuple[float, float]], values: np.ndarray) -> "Density":
        """Nodal samples on a uniform grid, multilinear in between."""
        values = np.asarray(values, dtype=float)
        if values.ndim != len(bounds) or min(values.shape) < 2:
            raise ValueError("samples need at least two points per axis in every dimension")
        flat_bounds = tuple(float(v) for b in bounds for v in b)
        return cls("samples", (len(bounds), flat_bounds, values.shape, tuple(values.ravel())))

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], label: str = "function") -> "Density":
        return cls("callable", (label,), fn=fn)

    # evaluation ------------------------------------------------------------
    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        k = self.kind
        if k == "constant":
            return np.full(x.shape[0], self.params[0])
        if k == "affine":
            c0, *g = self.params
            if len(g) != x.shape[1]:
                raise ValueError("affine density dimension mismatch")
            return c0 + x @ np.asarray(g)
        if k == "sine":
            return self.params[0] * np.prod(np.sin(np.pi * x), axis=1)
        if k == "samples":
            return self._interpolator()(x)
        if k == "sum":
            return sum(c(x) for c in self.children)
        if k == "scaled":
            return self.params[0] * self.children[0](x)
        if k == "pos":
            return np.maximum(self.children[0](x), 0.0)
        if k == "neg":
            return np.maximum(-self.children[0](x), 0.0)
        if k == "callable":
            return np.asarray(self.fn(x), dtype=float).reshape(x.shape[0])
        raise ValueError(f"unknown density kind {k!r}")

    def _interpolator(self) -> RegularGridInterpolator:
        interp = self.__dict__.get("_interp")
        if interp is None:
            dim, flat_bounds, shape, values = self.params
            axes = [np.linspace(flat_bounds[2 * d], flat_bounds[2 * d + 1], shape[d]) for d in range(dim)]
            interp = RegularGridInterpolator(
                axes, np.asarray(values).reshape(shape), bounds_error=False, fill_value=0.0
            )
            object.__setattr__(self, "_interp", interp)
        return interp

    # algebra ---------------------------------------------------------------
    def __add__(self, other: "Density") -> "Density":
        return Density("sum", (), (self, other))

    def scale(self, c: float) -> "Density":
        if self.kind == "constant":
            return Density.constant(c * self.params[0])
        return Density("scaled", (float(c),), (self,))

    def __neg__(self) -> "Density":
        return self.scale(-1.0)

    def positive_part(self) -> "Density":
        return Density("pos", (), (self,))

    def negative_part(self) -> "Density":
        return Density("neg", (), (self,))

    def sign_hint(self) -> int:
        """+1 if known non-negative, -1 if known non-positive, 0 otherwise."""
        k = self.kind
        if k == "constant":
            c = self.params[0]
            return 1 if c >= 0 else -1
        if k in ("pos", "neg"):
            return 1
        if k == "samples":
            v = np.asarray(self.params[3])
            return 1 if (v >= 0).all() else (-1 if (v <= 0).all() else 0)
        if k == "sum":
            signs = {c.sign_hint() for c in self.children}
            return signs.pop() if len(signs) == 1 else 0
        if k == "scaled":
            return int(np.sign(self.params[0])) * self.children[0].sign_hint()
        return 0

    # text form -------------------------------------------------------------
    def to_text(self) -> str:
        k = self.kind
        if k == "callable":
            raise ValueError(f"density {self.params[0]!r} wraps a Python callable and cannot be serialised")
        if k == "samples":
            dim, flat_bounds, shape, values = self.params
            nums = [dim, *flat_bounds, *shape, *values]
            return "samples(" + ",".join(_fmt(v) for v in nums) + ")"
        args = [_fmt(p) for p in self.params] + [c.to_text() for c in self.children]
        return f"{k}(" + ",".join(args) + ")"

    @classmethod
    def from_text(cls, text: str) -> "Density":
        node, rest = _parse_call(text.replace(" ", ""))
        if rest:
            raise ValueError(f"trailing characters in density expression: {rest!r}")
        return node


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _parse_call(s: str) -> tuple[Density, str]:
    i = s.find("(")
    if i <= 0:
        raise ValueError(f"malformed density expression near {s[:20]!r}")
    name, s = s[:i], s[i + 1 :]
    nums: list[float] = []
    kids: list[Density] = []
    while True:
        if s.startswith(")"):
            s = s[1:]
            break
        if s and (s[0].isalpha()):
            kid, s = _parse_call(s)
            kids.append(kid)
        else:
            j = 0
            while j < len(s) and s[j] not in ",)":
                j += 1
            nums.append(float(s[:j]))
            s = s[j:]
        if s.startswith(","):
            s = s[1:]
    if name == "constant":
        return Density.constant(nums[0]), s
    if name == "affine":
        return Density.affine(nums[0], *nums[1:]), s
    if name == "sine":
        return Density.sine(nums[0]), s
    if name == "samples":
        dim = int(nums[0])
        bounds = [(nums[1 + 2 * d], nums[2 + 2 * d]) for d in range(dim)]
        shape = tuple(int(v) for v in nums[1 + 2 * dim : 1 + 3 * dim])
        values = np.asarray(nums[1 + 3 * dim :]).reshape(shape)
        return Density.samples(bounds, values), s
    if name == "sum":
        return Density("sum", (), tuple(kids)), s
    if name == "scaled":
        return Density("scaled", (nums[0],), tuple(kids)), s
    if name in ("pos", "neg"):
        return Density(name, (), tuple(kids)), s
    raise ValueError(f"unknown density kind {name!r}")


# --------------------------------------------------------------------------
# carriers


@dataclass(frozen=True)
class Atom:
    location: Point
    mass: float

    def __post_init__(self):
        object.__setattr__(self, "location", _as_point(self.location))
        object.__setattr__(self, "mass", float(self.mass))
        if self.mass == 0.0 or not math.isfinite(self.mass):
            raise ValueError("atom mass must be finite and non-zero")


@dataclass(frozen=True)
class CurvePiece:
    """Polyline carrying a constant signed density per unit length."""

    polyline: tuple[Point, ...]
    linear_density: float

    def __post_init__(self):
        pts = tuple(_as_point(p) for p in self.polyline)
        object.__setattr__(self, "polyline", pts)
        object.__setattr__(self, "linear_density", float(self.linear_density))
        if len(pts) < 2:
            raise ValueError("a curve piece needs at least two points")
        if len({len(p) for p in pts}) != 1:
            raise ValueError("curve points must share one dimension")
        for a, b in zip(pts[:-1], pts[1:]):
            if a == b:
                raise ValueError("consecutive polyline points must be distinct")

    def segments(self) -> list[tuple[np.ndarray, np.ndarray]]:
        pts = np.asarray(self.polyline)
        return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]

    @property
    def length(self) -> float:
        pts = np.asarray(self.polyline)
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())

    def scaled(self, c: float) -> "CurvePiece":
        return CurvePiece(self.polyline, c * self.linear_density)


@dataclass(frozen=True)
class Measure:
    """Bounded signed measure: density + atoms + curve pieces on a box domain."""

    dimension: int
    atoms: tuple[Atom, ...] = ()
    curves: tuple[CurvePiece, ...] = ()
    density: Density | None = None
    domain: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError(f"unsupported dimension {self.dimension}")
        dom = self.domain or tuple((0.0, 1.0) for _ in range(self.dimension))
        dom = tuple((float(lo), float(hi)) for lo, hi in dom)
        if len(dom) != self.dimension or any(hi <= lo for lo, hi in dom):
            raise ValueError("domain must be a non-degenerate box of the measure's dimension")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "curves", tuple(c for c in self.curves if c.linear_density != 0.0))
        seen = set()
        for a in self.atoms:
            if len(a.location) != self.dimension:
                raise ValueError("atom dimension mismatch")
            if not all(lo < x < hi for x, (lo, hi) in zip(a.location, dom)):
                raise ValueError(f"atom at {a.location} is not inside the open domain")
            if a.location in seen:
                raise ValueError(f"two atoms share the location {a.location}")
            seen.add(a.location)
        for c in self.curves:
            for p in c.polyline:
                if len(p) != self.dimension:
                    raise ValueError("curve dimension mismatch")
                if not all(lo - _GEOM_TOL <= x <= hi + _GEOM_TOL for x, (lo, hi) in zip(p, dom)):
                    raise ValueError(f"curve point {p} lies outside the domain")

    # constructors ----------------------------------------------------------
    @classmethod
    def zero(cls, dimension: int = 2, domain=None) -> "Measure":
        return cls(dimension, domain=domain)

    @classmethod
    def dirac(cls, location: Sequence[float], mass: float = 1.0, domain=None) -> "Measure":
        return cls(len(location), atoms=(Atom(location, mass),), domain=domain)

    @classmethod
    def segment(cls, a: Sequence[float], b: Sequence[float], linear_density: float = 1.0, domain=None) -> "Measure":
        return cls(len(a), curves=(CurvePiece((a, b), linear_density),), domain=domain)

    @classmethod
    def from_density(cls, density: Density, dimension: int = 2, domain=None) -> "Measure":
        return cls(dimension, density=density, domain=domain)

    # algebra ---------------------------------------------------------------
    def _check_compatible(self, other: "Measure") -> None:
        if self.dimension != other.dimension or self.domain != other.domain:
            raise ValueError("measures live on different domains")

    def __add__(self, other: "Measure") -> "Measure":
        self._check_compatible(other)
        masses: dict[Point, float] = {}
        for a in self.atoms + other.atoms:
            masses[a.location] = masses.get(a.location, 0.0) + a.mass
        atoms = tuple(Atom(p, m) for p, m in masses.items() if m != 0.0)
        if self.density is None:
            dens = other.density
        elif other.density is None:
            dens = self.density
        else:
            dens = self.density + other.density
        return Measure(self.dimension, atoms, self.curves + other.curves, dens, self.domain)

    def scale(self, c: float) -> "Measure":
        if c == 0:
            return Measure.zero(self.dimension, self.domain)
        return Measure(
            self.dimension,
            tuple(Atom(a.location, c * a.mass) for a in self.atoms),
            tuple(cp.scaled(c) for cp in self.curves),
            None if self.density is None else self.density.scale(c),
            self.domain,
        )

    def __mul__(self, c: float) -> "Measure":
        return self.scale(c)

    __rmul__ = __mul__

    def __neg__(self) -> "Measure":
        return self.scale(-1.0)

    def __sub__(self, other: "Measure") -> "Measure":
        return self + (-other)

    def is_zero(self) -> bool:
        return not self.atoms and not self.curves and self.density is None

    def is_nonnegative(self) -> bool:
        if any(a.mass < 0 for a in self.atoms) or any(c.linear_density < 0 for c in self.curves):
            return False
        if self.density is None:
            return True
        hint = self.density.sign_hint()
        if hint != 0:
            return hint > 0
        pts, _ = density_rule(self)
        return bool((self.density(pts) >= -1e-14).all())


@dataclass(frozen=True)
class MeasureDecomposition:
    regular: Measure
    singular: Measure


# --------------------------------------------------------------------------
# operations


def density_rule(mu: Measure, point: Sequence[float] | None = None):
    """Tensor quadrature points/weights on the measure's domain."""
    grading = 0 if point is None else DENSITY_GRADING[mu.dimension]
    return tensor_rule(mu.domain, DENSITY_CELLS[mu.dimension], DENSITY_ORDER, point, grading)


def jordan_decompose(mu: Measure) -> tuple[Measure, Measure]:
    """Split ``mu`` into non-negative parts ``(mu_plus, mu_minus)``."""
    pos_atoms = tuple(a for a in mu.atoms if a.mass > 0)
    neg_atoms = tuple(Atom(a.location, -a.mass) for a in mu.atoms if a.mass < 0)
    pos_curves = tuple(c for c in mu.curves if c.linear_density > 0)
    neg_curves = tuple(c.scaled(-1.0) for c in mu.curves if c.linear_density < 0)
    pos_dens = neg_dens = None
    if mu.density is not None:
        hint = mu.density.sign_hint()
        if hint > 0:
            pos_dens = mu.density
        elif hint < 0:
            neg_dens = -mu.density
        else:
            pos_dens, neg_dens = mu.density.positive_part(), mu.density.negative_part()
    plus = Measure(mu.dimension, pos_atoms, pos_curves, pos_dens, mu.domain)
    minus = Measure(mu.dimension, neg_atoms, neg_curves, neg_dens, mu.domain)
    return plus, minus


def capacity_decompose(mu: Measure) -> MeasureDecomposition:
    """Split into the part vanishing on capacity-zero sets and the rest.

    Points are polar in every dimension here; rectifiable curves carry
    positive capacity in the plane but not in space.
    """
    n = mu.dimension
    if n == 2:
        regular = Measure(2, (), mu.curves, mu.density, mu.domain)
        singular = Measure(2, mu.atoms, (), None, mu.domain)
    elif n == 3:
        regular = Measure(3, (), (), mu.density, mu.domain)
        singular = Measure(3, mu.atoms, mu.curves, None, mu.domain)
    else:  # pragma: no cover - Measure rejects other dimensions
        raise ValueError(f"unsupported dimension {n}")
    return MeasureDecomposition(regular, singular)


def total_variation(mu: Measure) -> float:
    tv = sum(abs(a.mass) for a in mu.atoms)
    tv += sum(c.length * abs(c.linear_density) for c in mu.curves)
    if mu.density is not None:
        pts, wts = density_rule(mu)
        tv += float(np.dot(wts, np.abs(mu.density(pts))))
    return float(tv)


def _segments_overlap(a, b, c, d, tol: float = 1e-10) -> bool:
    """True when segments [a,b] and [c,d] share a piece of positive length."""
    u = b - a
    L = np.linalg.norm(u)
    e = u / L

    def off_line(p):
        w = p - a
        return np.linalg.norm(w - np.dot(w, e) * e)

    if off_line(c) > tol or off_line(d) > tol:
        return False
    s0, s1 = sorted((np.dot(c - a, e), np.dot(d - a, e)))
    return min(s1, L) - max(s0, 0.0) > tol


def _support_mask(mu: Measure, pts: np.ndarray) -> np.ndarray:
    return np.abs(mu.density(pts)) > 0


def mutually_singular(mu: Measure, nu: Measure) -> bool:
    """Structural test for disjoint carriers.

    Carriers of different type never overlap (points have zero length, curves
    zero area). Same-type carriers are compared directly; densities are
    compared on a midpoint sample of the common domain.
    """
    if mu.dimension != nu.dimension:
        raise ValueError("measures of different dimensions")
    for a in mu.atoms:
        for b in nu.atoms:
            if np.allclose(a.location, b.location, rtol=0.0, atol=_GEOM_TOL):
                return False
    for c1 in mu.curves:
        for c2 in nu.curves:
            for a, b in c1.segments():
                for c, d in c2.segments():
                    if _segments_overlap(a, b, c, d):
                        return False
    if mu.density is not None and nu.density is not None:
        lo = np.maximum([d[0] for d in mu.domain], [d[0] for d in nu.domain])
        hi = np.minimum([d[1] for d in mu.domain], [d[1] for d in nu.domain])
        if np.all(hi > lo):
            m = SUPPORT_SAMPLES[mu.dimension]
            axes = [lo[d] + (np.arange(m) + 0.5) * (hi[d] - lo[d]) / m for d in range(mu.dimension)]
            pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
            if np.any(_support_mask(mu, pts) & _support_mask(nu, pts)):
                return False
    return True
