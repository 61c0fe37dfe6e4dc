import math

import numpy as np
import pytest

from obstaclelab.quadrature import (
    TRIANGLE_BARY,
    TRIANGLE_WEIGHTS,
    adaptive_integrate,
    disk_rule,
    gauss_legendre,
    tensor_rule,
)


def test_gauss_legendre_exact_for_high_degree():
    x, w = gauss_legendre(5)
    for p in range(10):
        assert np.dot(w, x**p) == pytest.approx(1 / (p + 1), rel=1e-13)


def test_tensor_rule_places_point_on_faces():
    pts, wts = tensor_rule(((0, 1), (0, 2)), 8, 3, point=(0.3, 1.1), grading=4)
    assert wts.sum() == pytest.approx(2.0)
    assert not np.any(np.all(np.isclose(pts, (0.3, 1.1)), axis=1))
    assert np.dot(wts, pts[:, 0] * pts[:, 1] ** 2) == pytest.approx(0.5 * 8 / 3)


def test_adaptive_integrate_log_singularity():
    val = adaptive_integrate(lambda t: np.log(np.abs(t - 0.3)), 0.0, 1.0, breaks=(0.3,))
    exact = 0.3 * math.log(0.3) - 0.3 + 0.7 * math.log(0.7) - 0.7
    assert val == pytest.approx(exact, abs=1e-10)


def test_triangle_rule_degree_four():
    assert TRIANGLE_WEIGHTS.sum() == pytest.approx(1.0)
    # reference triangle (0,0),(1,0),(0,1): int x^a y^b = a! b! / (a+b+2)!
    x, y = TRIANGLE_BARY[:, 1], TRIANGLE_BARY[:, 2]
    for a in range(5):
        for b in range(5 - a):
            exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
            assert 0.5 * np.dot(TRIANGLE_WEIGHTS, x**a * y**b) == pytest.approx(exact, rel=1e-12)


def test_disk_rule_area_and_second_moment():
    pts, wts = disk_rule((0.2, -0.1), 0.5)
    assert wts.sum() == pytest.approx(math.pi * 0.25)
    r2 = np.sum((pts - np.array([0.2, -0.1])) ** 2, axis=1)
    assert np.dot(wts, r2) == pytest.approx(math.pi * 0.5**4 / 2)
