"""Exp-polynomial arithmetic: the closed form of every flow coefficient."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normflow.errors import NoLimitError
from normflow.exppoly import ExpPoly, ep_eval, ep_integrate, ep_limit_infinity, ep_mul


def test_mul_merges_rates():
    a = ExpPoly.term(1.0, s=1, nu=1)
    b = ExpPoly.term(1.0, s=1, nu=2)
    assert ep_mul(a, b).terms == {(2, 3): 1 + 0j}
    mixed = ep_mul(ExpPoly([(0, 0, 1.0), (1, 0, 1.0)]), ExpPoly.term(1.0, nu=1))
    assert mixed.terms == {(0, 1): 1 + 0j, (1, 1): 1 + 0j}


def test_integrate_closed_forms():
    i1 = ep_integrate(ExpPoly.term(1.0, nu=2))
    assert i1.terms == {(0, 0): 0.5 + 0j, (0, 2): -0.5 + 0j}
    i2 = ep_integrate(ExpPoly.term(1.0, s=1, nu=1))
    assert i2.terms == {(0, 0): 1 + 0j, (0, 1): -1 + 0j, (1, 1): -1 + 0j}
    i3 = ep_integrate(ExpPoly.term(1.0, s=2))
    assert i3.terms == {(3, 0): complex(1 / 3)}
    for d in (0.0, 0.5, 2.0):
        assert abs(ep_eval(i2, d) - (1 - (1 + d) * math.exp(-d))) < 1e-15


def test_limit_at_infinity():
    assert ep_limit_infinity(ExpPoly.term(1.0, nu=1)) == 0
    assert ep_limit_infinity(ExpPoly([(0, 0, 3.0), (2, 1, 1.0)])) == 3
    with pytest.raises(NoLimitError):
        ep_limit_infinity(ExpPoly.term(1.0, s=1))


def test_fraction_rates_stay_exact():
    x = ExpPoly([(0, Fraction(3, 2), 2 - 1j), (2, Fraction(1, 2), 0.25), (1, 0, 1.0)])
    keys = set(ep_integrate(x).terms)
    assert (0, Fraction(3, 2)) in keys and (2, 0) in keys


def test_integrate_then_differentiate_is_identity():
    x = ExpPoly([(0, Fraction(3, 2), 2 - 1j), (2, Fraction(1, 2), 0.25), (1, 0, 1.0)])
    diff = ep_integrate(x).differentiate() - x
    assert all(abs(c) < 1e-12 for c in diff.terms.values())
    assert abs(ep_eval(ep_integrate(x), 0.0)) < 1e-14


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 4),
                          st.floats(-2, 2), st.floats(-2, 2)),
                min_size=1, max_size=5),
       st.floats(0.1, 3.0))
def test_integral_matches_quadrature(raw, delta):
    ep = ExpPoly([(s, nu, complex(re, im)) for s, nu, re, im in raw])
    steps = 2000
    h = delta / steps
    acc = 0.5 * (ep_eval(ep, 0.0) + ep_eval(ep, delta))
    acc += sum(ep_eval(ep, h * i) for i in range(1, steps))
    assert abs(ep_eval(ep_integrate(ep), delta) - acc * h) < 5e-4 * (1 + abs(acc * h))
