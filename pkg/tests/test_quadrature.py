from math import factorial

import numpy as np
import pytest

from nhdfem.errors import InvalidArgument
from nhdfem.quadrature import gauss_interval, tet_rule, tri_rule


def tet_monomial(a, b, c):
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)


def tri_monomial(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(7))
def test_tet_monomial_sweep(degree):
    rule = tet_rule(degree)
    assert rule.exact_degree >= degree
    x, y, z = rule.points.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                got = rule.weights @ (x ** a * y ** b * z ** c)
                # relative: high-order moments are tiny, an absolute bound would hide errors
                assert abs(got / tet_monomial(a, b, c) - 1) < 2e-15


@pytest.mark.parametrize("degree", range(7))
def test_tri_monomial_sweep(degree):
    rule = tri_rule(degree)
    assert rule.exact_degree >= degree
    x, y = rule.points.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            assert abs(rule.weights @ (x ** a * y ** b) / tri_monomial(a, b) - 1) < 2e-15


@pytest.mark.parametrize("degree", range(7))
def test_weights_positive_points_inside(degree):
    for rule, measure in ((tet_rule(degree), 1 / 6), (tri_rule(degree), 1 / 2)):
        assert np.all(rule.weights > 0)
        assert abs(rule.weights.sum() - measure) < 1e-14
        assert np.all(rule.points > 0)
        assert np.all(rule.points.sum(axis=1) < 1)


def test_worked_values():
    r = tet_rule(2)
    assert abs(r.weights @ (r.points[:, 0] * r.points[:, 1]) - 1 / 120) < 1e-15
    r = tet_rule(4)
    assert abs(r.weights @ (r.points[:, 0] ** 2 * r.points[:, 1] ** 2) - 1 / 1260) < 1e-15
    t = tri_rule(2)
    assert abs(t.weights @ (t.points[:, 0] * t.points[:, 1]) - 1 / 24) < 1e-15
    t = tri_rule(3)
    assert abs(t.weights @ t.points[:, 0] ** 3 - 1 / 20) < 1e-15
    assert abs(tet_rule(0).weights.sum() - 1 / 6) < 1e-15


@pytest.mark.parametrize("bad", [-1, 7, 2.5, "2"])
def test_out_of_range(bad):
    with pytest.raises(InvalidArgument):
        tet_rule(bad)
    with pytest.raises(InvalidArgument):
        tri_rule(bad)


def test_deterministic():
    assert tet_rule(5) is tet_rule(5)
    np.testing.assert_array_equal(tri_rule(4).points, tri_rule(4).points)


def test_gauss_interval():
    s, w = gauss_interval(4)
    for k in range(8):
        assert abs(w @ s ** k - 1 / (k + 1)) < 1e-15
