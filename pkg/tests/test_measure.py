import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obstaclelab.measure import (
    Atom,
    CurvePiece,
    Density,
    Measure,
    capacity_decompose,
    jordan_decompose,
    mutually_singular,
    total_variation,
)

Y = (0.5, 0.5)
Z = (0.25, 0.75)


def test_jordan_positive_atom_is_unchanged():
    mu = Measure.dirac(Y, 1.0)
    plus, minus = jordan_decompose(mu)
    assert plus.atoms == (Atom(Y, 1.0),)
    assert minus.is_zero()


def test_jordan_splits_atom_and_density_by_sign():
    mu = Measure.from_density(Density.constant(2.0)) - Measure.dirac(Y, 1.0)
    plus, minus = jordan_decompose(mu)
    assert not plus.atoms and plus.density is not None
    assert total_variation(plus) == pytest.approx(2.0, abs=1e-12)
    assert minus.atoms == (Atom(Y, 1.0),) and minus.density is None


def test_jordan_affine_density_masses_are_one_eighth():
    mu = Measure.from_density(Density.affine(-0.5, 1.0, 0.0))
    plus, minus = jordan_decompose(mu)
    # (x - 1/2)^+ integrates to 1/8 on the unit square; the kink sits on a cell face
    assert total_variation(plus) == pytest.approx(0.125, abs=1e-12)
    assert total_variation(minus) == pytest.approx(0.125, abs=1e-12)
    pts = np.random.default_rng(0).random((200, 2))
    assert np.allclose(plus.density(pts) - minus.density(pts), mu.density(pts))
    assert np.all(plus.density(pts) >= 0) and np.all(minus.density(pts) >= 0)


def test_jordan_reconstructs_mixed_measure():
    mu = Measure(
        2,
        (Atom(Y, -1.5), Atom(Z, 0.25)),
        (CurvePiece(((0.1, 0.1), (0.9, 0.2)), -2.0), CurvePiece(((0.2, 0.8), (0.7, 0.9)), 1.0)),
        Density.sine(-3.0),
    )
    plus, minus = jordan_decompose(mu)
    back = plus - minus
    assert sorted((a.location, a.mass) for a in back.atoms) == sorted((a.location, a.mass) for a in mu.atoms)
    pts = np.random.default_rng(1).random((100, 2))
    assert np.allclose(back.density(pts), mu.density(pts))
    assert total_variation(mu) == pytest.approx(total_variation(plus) + total_variation(minus), rel=1e-12)
    assert mutually_singular(plus, minus)


def test_capacity_decompose_planar_atoms_are_singular():
    mu = Measure.from_density(Density.constant(1.0)) - Measure.dirac(Y, 1.0)
    parts = capacity_decompose(mu)
    assert parts.singular.atoms == (Atom(Y, -1.0),)
    assert parts.regular.density is not None and not parts.regular.atoms


def test_capacity_decompose_planar_curve_is_regular():
    mu = Measure.segment((0.1, 0.1), (0.9, 0.9), 1.0)
    parts = capacity_decompose(mu)
    assert parts.singular.is_zero()
    assert parts.regular.curves == mu.curves


def test_capacity_decompose_space_curve_and_atom_are_singular():
    mu = Measure.segment((0.5, 0.5, 0.1), (0.5, 0.5, 0.9), 1.0) + Measure.dirac((0.2, 0.2, 0.2), 1.0, domain=None)
    parts = capacity_decompose(mu)
    assert parts.regular.is_zero()
    assert len(parts.singular.atoms) == 1 and len(parts.singular.curves) == 1


def test_capacity_parts_sum_back():
    mu = Measure(2, (Atom(Y, 2.0),), (CurvePiece(((0.1, 0.5), (0.9, 0.5)), 1.0),), Density.constant(1.0))
    parts = capacity_decompose(mu)
    total = parts.regular + parts.singular
    assert total.atoms == mu.atoms and total.curves == mu.curves


@pytest.mark.parametrize(
    "mu, expected",
    [
        (Measure.dirac(Y, 1.0), 1.0),
        (Measure.from_density(Density.constant(3.0)), 3.0),
        (Measure.segment((0.2, 0.5), (0.8, 0.5), -2.0) + Measure.segment((0.5, 0.1), (0.5, 0.5), -2.0), 2.0),
    ],
)
def test_total_variation_examples(mu, expected):
    assert total_variation(mu) == pytest.approx(expected, abs=1e-12)


def test_mutually_singular_examples():
    assert mutually_singular(Measure.dirac(Y), Measure.dirac(Z))
    assert not mutually_singular(Measure.dirac(Y), Measure.dirac(Y))
    box = ((-1.0, 1.0),) * 3
    atom = Measure.dirac((0.0, 0.0, 0.0), domain=box)
    seg = Measure.segment((0.0, 0.0, -0.5), (0.0, 0.0, 0.5), domain=box)
    assert mutually_singular(atom, seg) and mutually_singular(seg, atom)


def test_mutually_singular_overlapping_curves_and_densities():
    a = Measure.segment((0.1, 0.1), (0.6, 0.6))
    b = Measure.segment((0.4, 0.4), (0.9, 0.9))
    assert not mutually_singular(a, b)
    left = Measure.from_density(Density.affine(-0.5, 1.0, 0.0).negative_part())
    right = Measure.from_density(Density.affine(-0.5, 1.0, 0.0).positive_part())
    assert mutually_singular(left, right)
    assert not mutually_singular(left, Measure.from_density(Density.constant(1.0)))


points = st.tuples(st.floats(0.05, 0.95), st.floats(0.05, 0.95))


@settings(max_examples=40, deadline=None)
@given(points, st.floats(-3, 3).filter(lambda m: abs(m) > 1e-3))
def test_mutually_singular_with_zero_and_symmetric(p, m):
    mu = Measure.dirac(p, m)
    zero = Measure.zero(2)
    assert mutually_singular(mu, zero) and mutually_singular(zero, mu)
    nu = Measure.segment((0.05, 0.05), (0.95, 0.1))
    assert mutually_singular(mu, nu) == mutually_singular(nu, mu)


def test_measure_validation():
    with pytest.raises(ValueError):
        Measure.dirac((1.5, 0.5))
    with pytest.raises(ValueError):
        Measure(2, (Atom(Y, 1.0), Atom(Y, 2.0)))
    with pytest.raises(ValueError):
        Atom(Y, 0.0)
    with pytest.raises(ValueError):
        Measure(4)


def test_addition_merges_atoms():
    mu = Measure.dirac(Y, 1.0) + Measure.dirac(Y, -1.0) + Measure.dirac(Z, 2.0)
    assert mu.atoms == (Atom(Z, 2.0),)
    assert (Measure.dirac(Y) * 3).atoms[0].mass == 3.0


def test_density_text_roundtrip():
    d = Density.sine(2.0) + Density.affine(1.0, -0.5, 0.25).scale(3.0)
    back = Density.from_text(d.to_text())
    pts = np.random.default_rng(2).random((50, 2))
    assert np.allclose(back(pts), d(pts))
    s = Density.samples(((0, 1), (0, 1)), np.arange(12.0).reshape(3, 4))
    assert np.allclose(Density.from_text(s.to_text())(pts), s(pts))
