import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from respoisson.rhs_dsl import (DSLDomainError, DSLError, DSLSyntaxError, SymbolTable,
                                dependence_order, evaluate, parse, partial, to_string, variables)

T = SymbolTable(3, 1, 2)


def test_parse_and_evaluate():
    e = parse("2 * u1^2 + sin(x1) - d1_110 / 4", T)
    val = evaluate(e, {"u1": 0.5, "x1": 0.3, "d1_110": 2.0})
    assert math.isclose(val, 0.5 + math.sin(0.3) - 0.5)
    assert variables(e) == {"u1", "x1", "d1_110"}
    assert dependence_order(e) == 2


def test_errors():
    with pytest.raises(DSLSyntaxError):
        parse("u1 +", T)
    with pytest.raises(DSLError):
        parse("u2", T)
    with pytest.raises(DSLError):
        parse("d1_300", T)


def test_domain_error():
    with pytest.raises((DSLDomainError, ValueError)):
        evaluate(parse("1 / u1", T), {"u1": 0.0})


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_partial_matches_difference(a, b):
    e = parse("u1^3 * x1 + exp(x1) * u1", T)
    de = partial(e, "u1")
    h = 1e-6
    fd = (evaluate(e, {"u1": a + h, "x1": b}) - evaluate(e, {"u1": a - h, "x1": b})) / (2 * h)
    assert math.isclose(evaluate(de, {"u1": a, "x1": b}), fd, rel_tol=1e-5, abs_tol=1e-5)


@given(st.floats(-3, 3))
def test_round_trip_string(a):
    e = parse("-(u1 - 2)^2 * abspow(u1, 2.5) + 3", T)
    e2 = parse(to_string(e), T)
    assert math.isclose(evaluate(e, {"u1": a}), evaluate(e2, {"u1": a}), rel_tol=1e-12, abs_tol=1e-12)


def test_array_bindings():
    v = evaluate(parse("u1 * x2", SymbolTable(3, 1, 0)), {"u1": np.arange(3.0), "x2": 2.0})
    assert np.allclose(v, [0, 2, 4])
