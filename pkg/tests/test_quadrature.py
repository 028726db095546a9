import math

import numpy as np
import pytest

from respoisson.quadrature import (ball_rule, sphere_distance_closed_form, sphere_distance_integral,
                                   singular_ball_integrate, sphere_monomial_moment, sphere_rule,
                                   star_rule, unit_sphere_points)
from respoisson.specfun import sphere_area, unit_ball_volume


@pytest.mark.parametrize("n", [3, 4, 5])
def test_rules_integrate_constants(n):
    assert math.isclose(ball_rule(n, 0.7, 8).integrate(lambda y: np.ones(len(y))),
                        unit_ball_volume(n) * 0.7 ** n, rel_tol=1e-12)
    assert math.isclose(sphere_rule(n, 1.3, 8).integrate(lambda y: np.ones(len(y))),
                        sphere_area(n) * 1.3 ** (n - 1), rel_tol=1e-12)


def test_sphere_monomials():
    pts, w = unit_sphere_points(3, 10)
    for g in [(2, 0, 0), (2, 2, 0), (4, 0, 2), (1, 0, 0)]:
        val = w @ np.prod(pts ** np.array(g), axis=1)
        assert abs(val - sphere_monomial_moment(g)) < 1e-12


def test_star_rule_off_centre():
    rule = star_rule(3, 1.0, np.array([0.3, -0.2, 0.1]), 12)
    assert math.isclose(rule.integrate(lambda y: np.sum(y ** 2, axis=1)),
                        4 * math.pi / 5, rel_tol=1e-10)


def test_singular_integral_of_inverse_distance():
    # int_{B_1} |x - y|^{-1} dy = 2 pi (1 - |x|^2 / 3)
    x = np.array([0.4, 0.1, -0.2])
    val = singular_ball_integrate(lambda y: np.ones(len(y)), 1.0, x, 1.0, 16)
    assert math.isclose(val, 2 * math.pi * (1 - x @ x / 3), rel_tol=1e-10)


def test_sphere_distance_closed_form_agrees():
    for r in (0.3, 0.9, 0.99):
        assert math.isclose(sphere_distance_integral(0.25, r), sphere_distance_closed_form(0.25, r), rel_tol=1e-7)
