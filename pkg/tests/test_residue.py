import math

import numpy as np

from respoisson.polys import Polynomial
from respoisson.residue import (boundary_integral, boundary_moment, closed_form_boundary_integral,
                                closed_form_moment, constants_table, exact_moment_at_origin,
                                residue_constant)


def test_raw_moment_is_linear():
    x = np.array([0.3, -0.1, 0.2])
    val = boundary_moment((0, 0, 0), (0, 0, 0), 1, 1.0, x, convention="RAW")
    assert math.isclose(val, closed_form_moment(3) * x[0], rel_tol=1e-9)
    assert math.isclose(closed_form_moment(3), 4 * math.pi / 3, rel_tol=1e-12)


def test_boundary_integral_matches_closed_form():
    f = Polynomial(3, {(2, 0, 0): 1.0, (0, 1, 1): -2.0, (0, 0, 0): 0.5})
    P = closed_form_boundary_integral(f, 1.0)
    for x in ([0.1, 0.2, -0.3], [-0.4, 0.0, 0.2]):
        x = np.array(x)
        assert math.isclose(boundary_integral(f, x, 1.0)[0], float(P(x)), rel_tol=1e-9, abs_tol=1e-12)


def test_high_order_moments_vanish():
    assert abs(exact_moment_at_origin((2, 1, 0), (0, 0, 0), 1, 3)) < 1e-12
    assert abs(residue_constant((2, 1, 1), (1, 0, 0), 2, 3)) < 1e-12


def test_constants_table_shape():
    rows = constants_table(3, 2)
    assert rows and all(r.n == 3 for r in rows)
