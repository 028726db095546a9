import numpy as np
from hypothesis import given, settings, strategies as st

from respoisson.multiindex import multi_indices_upto
from respoisson.polys import (Polynomial, harmonic_decompose, is_m_harmonic, laplacian,
                              laplacian_power, m_harmonic_projection)

BASIS = multi_indices_upto(3, 4)
polys = st.lists(st.integers(-3, 3), min_size=len(BASIS), max_size=len(BASIS)).map(
    lambda cs: Polynomial(3, {b: float(c) for b, c in zip(BASIS, cs) if c}))


def test_laplacian_of_r2():
    r2 = Polynomial.radial(3, 1)
    assert laplacian(r2) == Polynomial.constant(3, 6.0)
    assert laplacian_power(Polynomial.radial(3, 2), 2) == Polynomial.constant(3, 120.0)


@given(polys, polys)
@settings(max_examples=40, deadline=None)
def test_product_rule_values(p, q):
    x = np.array([[0.3, -0.2, 0.5], [0.1, 0.4, -0.7]])
    assert np.allclose((p * q)(x), p(x) * q(x))
    assert np.allclose((p - q)(x), p(x) - q(x))


@given(polys)
@settings(max_examples=30, deadline=None)
def test_derivative_matches_difference(p):
    x = np.array([[0.2, -0.1, 0.3]])
    h = 1e-5
    e = np.array([[h, 0, 0]])
    fd = (p(x + e) - p(x - e)) / (2 * h)
    assert np.allclose(p.partial(0)(x), fd, atol=1e-6 * max(1, p.coeff_norm()))


@given(polys)
@settings(max_examples=30, deadline=None)
def test_harmonic_decomposition_recombines(p):
    h = p.homogeneous_part(4)
    if h.is_zero():
        return
    dec = harmonic_decompose(h)
    assert dec.recombine().allclose(h, 1e-9)
    for _, P in dec.components:
        assert laplacian(P).coeff_norm() < 1e-9


def test_m_harmonic_projection():
    p = Polynomial.monomial((4, 0, 0))
    q = m_harmonic_projection(p, 2)
    assert is_m_harmonic(q, 2)
    assert not is_m_harmonic(p, 2)


def test_json_round_trip():
    p = Polynomial(3, {(1, 2, 0): 0.5, (0, 0, 0): -1.0})
    assert Polynomial.from_json(p.to_json()) == p
