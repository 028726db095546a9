import math

import numpy as np
import pytest
from scipy.special import eval_gegenbauer

from respoisson.specfun import (Convention, FundamentalSolution, d_gamma, gegenbauer,
                                gegenbauer_norm, kernel_gegenbauer_expansion, sphere_area,
                                unit_ball_volume)


def test_volumes():
    assert math.isclose(unit_ball_volume(3), 4 * math.pi / 3)
    assert math.isclose(sphere_area(3), 4 * math.pi)
    assert math.isclose(sphere_area(4), 2 * math.pi ** 2)


def test_fundamental_solution_n3():
    fs = FundamentalSolution(3)
    assert math.isclose(fs(np.array([2.0, 0, 0])), -1 / (8 * math.pi))
    assert FundamentalSolution(3, Convention.RAW).c_n == 1.0
    with pytest.raises(ValueError):
        FundamentalSolution(2)


@pytest.mark.parametrize("rho", [0.5, 1.0, 1.5])
def test_gegenbauer_against_scipy(rho):
    t = np.linspace(-1, 1, 9)
    for l in range(7):
        assert np.allclose(gegenbauer(l, rho, t), eval_gegenbauer(l, rho, t))


def test_gegenbauer_norm_legendre():
    # rho = 1/2 is Legendre with unit weight: 2 / (2l + 1)
    for l in range(6):
        assert math.isclose(gegenbauer_norm(l, 0.5), 2 / (2 * l + 1), rel_tol=1e-12)


def test_gamma_derivative_against_difference():
    fs = FundamentalSolution(3)
    x = np.array([[0.4, -0.3, 0.5]])
    h = 1e-5
    fd = (fs(x + [h, 0, 0]) - fs(x - [h, 0, 0])) / (2 * h)
    assert np.allclose(d_gamma((1, 0, 0), fs, x), fd, rtol=1e-7)


def test_kernel_expansion_converges():
    fs = FundamentalSolution(3)
    x = np.array([0.2, 0.1, -0.1])
    yhat = np.array([0.0, 0.6, 0.8])
    exact = float(fs(x - yhat))
    assert math.isclose(kernel_gegenbauer_expansion(fs, x, yhat, 40), exact, rel_tol=1e-12)
