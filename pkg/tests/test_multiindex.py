import math

import pytest
from hypothesis import given, strategies as st

from respoisson.multiindex import (MultiIndex, dual, enumerate_nestings, lambda_set, multi_indices,
                                   multi_indices_upto, nesting_count)

betas = st.lists(st.integers(0, 3), min_size=3, max_size=4)


def test_rejects_low_dimension_and_negative():
    with pytest.raises(ValueError):
        MultiIndex((1, 2))
    with pytest.raises(ValueError):
        MultiIndex((1, -1, 0))


def test_counts():
    assert len(multi_indices(3, 2)) == 6
    assert len(multi_indices_upto(3, 2)) == 10
    # order-2 indices with an odd entry: the three mixed ones
    assert sorted(lambda_set(3, 1)) == [(0, 1, 1), (1, 0, 1), (1, 1, 0)]


@given(betas)
def test_nesting_count_is_multinomial(b):
    beta = MultiIndex(b)
    if beta.order == 0:
        return
    expected = math.factorial(beta.order) // beta.factorial
    assert nesting_count(beta) == expected
    if beta.order <= 5:
        assert len(enumerate_nestings(beta)) == expected


@given(betas)
def test_nestings_are_increasing_chains(b):
    beta = MultiIndex(b)
    if beta.order == 0 or beta.order > 5:
        return
    for ns in enumerate_nestings(beta)[:5]:
        assert len(ns) == beta.order
        for j in range(1, len(ns) + 1):
            assert ns.step(j).order == j
            assert ns.step(j) + ns.dual(j) == beta


def test_dual_requires_le():
    assert dual((1, 0, 0), (2, 1, 0)) == (1, 1, 0)
    with pytest.raises(ValueError):
        dual((0, 2, 0), (2, 1, 0))
