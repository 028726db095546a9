import math

import numpy as np

from respoisson.polys import Polynomial, laplacian
from respoisson.potential import (BumpField, PolynomialField, calibration_report, correction_sign,
                                  d_beta_newtonian, fd_derivative, fd_step, holder_norms,
                                  newtonian, newtonian_polynomial, pv_derivative)


def _radial_oracle(r, R=1.0):
    # N(1) for the unit-weight Laplacian in R^3: r^2/6 - R^2/2
    return r * r / 6 - R * R / 2


def test_newtonian_of_constant():
    x = np.array([0.3, 0.2, -0.1])
    one = PolynomialField(Polynomial.constant(3, 1.0))
    assert math.isclose(newtonian(one, x), _radial_oracle(np.linalg.norm(x)), rel_tol=1e-9)
    assert math.isclose(float(newtonian_polynomial(Polynomial.constant(3, 1.0), 1.0)(x)),
                        _radial_oracle(np.linalg.norm(x)), rel_tol=1e-12)


def test_newtonian_polynomial_inverts_laplacian():
    p = Polynomial(3, {(1, 2, 0): 1.0, (0, 0, 3): -0.5, (1, 0, 0): 2.0})
    assert laplacian(newtonian_polynomial(p, 1.0)).allclose(p, 1e-10)


def test_iterated_newtonian_radial():
    # N(N(1))(r) by direct radial integration of the Green function
    NN = newtonian_polynomial(newtonian_polynomial(Polynomial.constant(3, 1.0), 1.0), 1.0)
    from scipy.integrate import quad
    g = lambda s: _radial_oracle(s)  # noqa: E731
    r = 0.4
    inner = quad(lambda s: g(s) * s * s, 0, r)[0] / r
    outer = quad(lambda s: g(s) * s, r, 1.0)[0]
    assert math.isclose(float(NN(np.array([r, 0, 0]))), -inner - outer, rel_tol=1e-10)


def test_calibration_sign():
    rep = calibration_report(3)
    assert rep["poisson_residual"] < 1e-6
    assert correction_sign(3) in (1.0, -1.0)


def test_dnf_matches_closed_form_derivative():
    p = Polynomial(3, {(2, 1, 0): 1.0, (0, 0, 2): 1.0, (0, 0, 0): 1.0})
    x = np.array([0.1, -0.2, 0.15])
    exact = float(newtonian_polynomial(p, 1.0).derivative((1, 1, 0))(x))
    val = d_beta_newtonian((1, 1, 0), PolynomialField(p), x)
    assert abs(val - exact) < 1e-6 * max(1.0, abs(exact))


def test_fd_derivative_polynomial():
    p = Polynomial(3, {(3, 1, 0): 1.0})
    x = np.array([[0.3, 0.2, 0.0]])
    val = fd_derivative(p, (2, 1, 0), x, fd_step(3, 1.0))[0]
    assert math.isclose(val, 6 * 0.3, rel_tol=1e-6)


def test_pv_radius_independence():
    bump = BumpField(np.array([0.1, 0.0, 0.0]), 0.4, 1.0, power=6)
    x = np.array([0.12, 0.02, 0.0])
    a = pv_derivative((2, 0, 0), bump, x, R=1.0)
    b = pv_derivative((2, 0, 0), bump.with_radius(1.5), x, R=1.5)
    assert abs(a - b) < 1e-6


def test_holder_monotone_in_samples():
    f = PolynomialField(Polynomial.monomial((1, 1, 0)), 1.0)
    small = holder_norms(f, 0.5, sample_count=200)
    big = holder_norms(f, 0.5, sample_count=800)
    assert big.holder >= small.holder
