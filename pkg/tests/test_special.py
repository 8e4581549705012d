import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eeplan.special import gamma_difference, upper_incomplete_gamma
from oracles import gamma_reference


def test_known_values():
    assert upper_incomplete_gamma(2, 0) == pytest.approx(1.0, rel=1e-14)
    assert upper_incomplete_gamma(1, 1) == pytest.approx(math.exp(-1), rel=1e-12)
    assert upper_incomplete_gamma(3, 2) == pytest.approx(10 * math.exp(-2), rel=1e-12)


def test_infinite_argument_vanishes():
    assert upper_incomplete_gamma(2.5, math.inf) == 0.0


@pytest.mark.parametrize("s,x", [(0, 1), (-1, 1), (1, -0.1)])
def test_domain_errors(s, x):
    with pytest.raises(ValueError):
        upper_incomplete_gamma(s, x)


@settings(max_examples=150, deadline=None)
@given(st.floats(0.1, 12), st.floats(0, 40))
def test_matches_high_precision_reference(s, x):
    ref = gamma_reference(s, x)
    assert upper_incomplete_gamma(s, x) == pytest.approx(ref, rel=1e-10, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 8), st.floats(0, 20), st.floats(0, 20))
def test_difference_nonnegative_and_consistent(s, a, b):
    lo, hi = sorted((a, b))
    diff = gamma_difference(s, lo, hi)
    assert diff >= 0
    direct = upper_incomplete_gamma(s, lo) - upper_incomplete_gamma(s, hi)
    assert diff == pytest.approx(direct, rel=1e-9, abs=1e-12)


def test_integer_shape_closed_form():
    # Gamma(n; x) = (n-1)! e^-x sum_{k<n} x^k / k!
    for n in range(1, 7):
        for x in (0.3, 2.0, 9.0):
            ref = math.factorial(n - 1) * math.exp(-x) * sum(x**k / math.factorial(k) for k in range(n))
            assert upper_incomplete_gamma(n, x) == pytest.approx(ref, rel=1e-12)
