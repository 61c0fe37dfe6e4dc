import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from obstaclelab.grid import (
    CoefficientField,
    NodalFunction,
    assemble,
    build_grid,
    check_green_bounds,
    discrete_green,
    duality_bound,
    duality_check,
    estimate_capacity,
    load_vector,
    nodal_csv,
    relative_residual,
    solve_dirichlet,
    truncation_energy,
)
from obstaclelab.measure import Atom, Density, Measure
from obstaclelab.potentials import fundamental_solution

CENTER = (0.5, 0.5)


def five_point(n):
    """Classical 5-point Laplacian (times h^2) on the (n-1)^2 interior nodes."""
    m = n - 1
    t = sp.diags([-1, 2, -1], [-1, 0, 1], shape=(m, m))
    eye = sp.identity(m)
    return (sp.kron(eye, t) + sp.kron(t, eye)).toarray()


def test_grid_counts():
    assert build_grid(n=4).num_interior == 9
    assert build_grid(n=17).num_interior == 256
    g = build_grid(((0.0, 2.0), (0.0, 1.0)), (8, 4))
    assert g.num_interior == 7 * 3
    assert g.hx == pytest.approx(0.25) and g.hy == pytest.approx(0.25)
    with pytest.raises(ValueError):
        build_grid(n=2)


def test_identity_stiffness_is_five_point_laplacian():
    op = assemble(build_grid(n=4))
    assert np.allclose(op.stiffness.toarray(), five_point(4), atol=1e-14)
    assert op.is_symmetric


def test_stiffness_scales_with_coefficient():
    g = build_grid(n=8)
    a = assemble(g).stiffness.toarray()
    b = assemble(g, CoefficientField.scalar(3.5)).stiffness.toarray()
    assert np.allclose(b, 3.5 * a)


def test_nonsymmetric_coefficients_have_distinct_adjoint():
    g = build_grid(n=8)
    # a constant skew part cancels after assembly; a varying one does not
    assert assemble(g, CoefficientField.constant([[1.0, 0.3], [-0.3, 1.0]])).is_symmetric
    op = assemble(g, CoefficientField.from_selector("skew:1.0:0.8"))
    assert not op.is_symmetric
    assert abs(op.adjoint - op.stiffness).max() > 1e-3


def test_ellipticity_violation_rejected():
    with pytest.raises(ValueError):
        assemble(build_grid(n=8), CoefficientField.constant([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(ValueError):
        CoefficientField.from_selector("bogus")


def test_identity_stiffness_is_m_matrix():
    S = assemble(build_grid(n=12), CoefficientField.checkerboard(1.0, 4.0)).stiffness.toarray()
    off = S - np.diag(np.diag(S))
    assert np.all(off <= 1e-14)
    assert np.all(np.linalg.inv(S) >= -1e-14)


def test_load_of_atom_at_node_and_inside_element():
    g = build_grid(n=8)
    node = g.node_xy(3, 5)
    m = load_vector(g, Measure.dirac(tuple(node)))
    assert m[g.interior_index(3, 5)] == pytest.approx(1.0)
    assert np.count_nonzero(np.abs(m) > 1e-14) == 1
    m = load_vector(g, Measure.dirac((0.43, 0.61)))
    assert m.sum() == pytest.approx(1.0)
    assert np.count_nonzero(m) == 3 and np.all(m >= 0)


def test_load_of_unit_density():
    for n in (8, 31):
        g = build_grid(n=n)
        m = load_vector(g, Measure.from_density(Density.constant(1.0)))
        assert m.sum() == pytest.approx((1 - g.h) ** 2, rel=1e-12)


def test_load_of_interior_segment_has_its_length():
    g = build_grid(n=16)
    seg = Measure.segment((0.2, 0.3), (0.77, 0.81), 2.0)
    length = math.hypot(0.57, 0.51)
    assert load_vector(g, seg).sum() == pytest.approx(2 * length, rel=1e-12)


def test_load_rejects_atom_outside_rectangle():
    g = build_grid(((0.0, 0.5), (0.0, 0.5)), 8)
    with pytest.raises(ValueError):
        load_vector(g, Measure.dirac((0.7, 0.7)))


def test_zero_datum_and_residual():
    op = assemble(build_grid(n=16))
    assert solve_dirichlet(op, Measure.zero()).max_abs() == 0.0
    mu = Measure.from_density(Density.sine(1.0)) + Measure.dirac((0.3, 0.3), -2.0)
    u = solve_dirichlet(op, mu)
    assert relative_residual(op, u, load_vector(op.grid, mu)) <= 1e-12


def test_manufactured_solution_second_order():
    errs = []
    mu = Measure.from_density(Density.sine(2 * math.pi**2))
    for n in (16, 32, 64):
        g = build_grid(n=n)
        u = solve_dirichlet(assemble(g), mu)
        exact = np.prod(np.sin(math.pi * g.interior_points()), axis=1)
        errs.append(np.abs(u.values - exact).max())
    assert 3.5 <= errs[0] / errs[1] <= 4.5 and 3.5 <= errs[1] / errs[2] <= 4.5


def test_point_source_matches_fundamental_solution_up_to_smooth_corrector():
    correctors = []
    for n in (32, 64, 128):
        g = build_grid(n=n)
        G = discrete_green(assemble(g), CENTER)
        d = np.linalg.norm(g.interior_points() - np.array(CENTER), axis=1)
        ring = (d >= 4 * g.h - 1e-12) & (d <= 8 * g.h + 1e-12)
        diff = G.values[ring] - fundamental_solution(2, d[ring])
        assert np.ptp(diff) < 5e-3
        correctors.append(diff.mean())
    assert max(correctors) - min(correctors) < 1e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.2, 5.0))
def test_maximum_principle_and_linearity(seed, c):
    rng = np.random.default_rng(seed)
    op = assemble(build_grid(n=10), CoefficientField.scalar(c))
    m1 = rng.random(op.grid.num_interior) * (rng.random(op.grid.num_interior) < 0.3)
    m2 = rng.normal(size=op.grid.num_interior)
    u1 = solve_dirichlet(op, m1).values
    assert np.all(u1 >= -1e-15)
    u12 = solve_dirichlet(op, m1 + m2).values
    assert np.allclose(u12, u1 + solve_dirichlet(op, m2).values, atol=1e-12)


def test_green_symmetry_nonnegativity_and_scaling():
    g = build_grid(n=20)
    op = assemble(g, CoefficientField.checkerboard(1.0, 3.0))
    x, y = (0.3, 0.65), (0.75, 0.4)
    gx, gy = discrete_green(op, x), discrete_green(op, y)
    assert abs(gx(np.array([y]))[0] - gy(np.array([x]))[0]) <= 1e-10
    S_inv = op.solve(np.eye(g.num_interior))
    assert np.abs(S_inv - S_inv.T).max() <= 1e-10
    assert np.all(discrete_green(assemble(g), CENTER).values >= 0)
    g2 = discrete_green(assemble(g, CoefficientField.scalar(2.0)), CENTER)
    assert np.allclose(g2.values, 0.5 * discrete_green(assemble(g), CENTER).values)


def test_green_bounds():
    K = ((0.4, 0.6), (0.4, 0.6))
    g = build_grid(n=64)
    b1 = check_green_bounds(assemble(g), K)
    assert b1.ok and b1.c1 <= b1.c2
    assert 0.8 <= b1.nearest_ratios[0] <= b1.nearest_ratios[1] <= 1.2
    b2 = check_green_bounds(assemble(g, CoefficientField.scalar(2.0)), K)
    assert b2.c1 == pytest.approx(0.5 * b1.c1) and b2.c2 == pytest.approx(0.5 * b1.c2)
    assert b2.nearest_ratios[0] == pytest.approx(0.5 * b1.nearest_ratios[0])


def test_duality_trivial_cases():
    g = build_grid(n=16)
    op = assemble(g)
    rng = np.random.default_rng(0)
    assert duality_check(op, Measure.zero(), rng.random(g.num_interior)) == 0.0
    assert duality_check(op, Measure.dirac(CENTER), np.zeros(g.num_interior)) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_duality_random_atomic_nonsymmetric(seed):
    rng = np.random.default_rng(seed)
    g = build_grid(n=32)
    op = assemble(g, CoefficientField.skewed(1.5, 0.9))
    mu = Measure(2, tuple(Atom(tuple(rng.uniform(0.05, 0.95, 2)), float(rng.normal())) for _ in range(4)))
    gv = rng.uniform(-2, 2, g.num_interior)
    assert duality_check(op, mu, gv) <= duality_bound(mu, gv)


def test_truncation_energy_examples():
    op = assemble(build_grid(n=16))
    u = solve_dirichlet(op, Measure.from_density(Density.sine(1.0)))
    S = op.stiffness
    assert truncation_energy(op, u, 2 * u.max_abs()) == pytest.approx(u.values @ (S @ u.values))
    assert truncation_energy(op, np.zeros(op.grid.num_interior), 0.3) == 0.0
    with pytest.raises(ValueError):
        truncation_energy(op, u, 0.0)


@pytest.mark.parametrize("n", [32, 64, 128])
def test_truncation_energy_of_point_source(n):
    op = assemble(build_grid(n=n))
    u = discrete_green(op, CENTER)
    assert truncation_energy(op, u, 0.1) <= 0.1 * 1.01


def test_capacity_basic_properties():
    g = build_grid(n=32)
    assert estimate_capacity(g, []) == 0.0
    small = g.nodes_in_disk(CENTER, 0.1)
    big = g.nodes_in_disk(CENTER, 0.2)
    assert set(small) <= set(big)
    assert estimate_capacity(g, small) <= estimate_capacity(g, big)
    caps = [estimate_capacity(build_grid(n=n), [build_grid(n=n).nearest_node(CENTER)]) for n in (16, 32, 64)]
    assert caps[0] > caps[1] > caps[2]


def test_nodal_function_interpolates_nodes_and_csv():
    g = build_grid(n=8)
    vals = np.arange(g.num_interior, dtype=float)
    f = NodalFunction(g, vals)
    assert np.allclose(f(g.interior_points()), vals)
    assert f(np.array([[0.0, 0.3]]))[0] == 0.0
    text = nodal_csv(g, {"u": vals})
    lines = text.splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    assert any(ln.startswith("# h =") for ln in header)
    assert lines[len(header)] == "x,y,u"
    assert len(lines) == len(header) + 1 + g.num_interior
