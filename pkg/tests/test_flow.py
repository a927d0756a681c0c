"""Exact coefficient flow against hand solutions and the numeric oracle."""

import math
from fractions import Fraction

import pytest

from normflow.algebra import FormalSeries, MultiIndex
from normflow.errors import DimensionMismatchError
from normflow.exppoly import ExpPoly, ep_eval
from normflow.flow import (birkhoff_oracle, check_reality, fitted_decay_rate, flow_exact,
                           flow_numeric, normal_form_limit, rhs_terms)
from normflow.resonance import Frequency

OM1 = Frequency([Fraction(1)])
K22 = MultiIndex((2,), (2,))


def cubic_pair():
    return FormalSeries(1, 6, {MultiIndex((3,), (0,)): 1.0,
                               MultiIndex((0,), (3,)): 1.0})


def test_rhs_terms_hand_table():
    c30, c21, c12, c03 = 0.7 + 0.2j, -0.3 + 1.1j, 0.5 - 0.4j, -1.2 + 0.9j
    coeffs = {MultiIndex((3,), (0,)): c30, MultiIndex((2,), (1,)): c21,
              MultiIndex((1,), (2,)): c12, MultiIndex((0,), (3,)): c03}
    v1, v2 = rhs_terms(K22, coeffs, OM1)
    assert v1 == 0j
    got = sorted(((complex(v), nu) for v, nu in v2), key=lambda t: t[1])
    want = sorted([(-6 * c21 * c12, 2), (-18 * c30 * c03, 6)], key=lambda t: t[1])
    for (gv, gn), (wv, wn) in zip(got, want):
        assert gn == wn and abs(gv - wv) < 1e-14


def test_closed_form_quartic_target():
    # z^3 + zbar^3: the (2,2) coefficient solves to -3 + 3 e^{-6 delta}
    sol = flow_exact(cubic_pair(), OM1, 6)
    ep = sol.coefficient(K22)
    assert set(ep.terms) == {(0, 0), (0, 6)}
    assert abs(ep.terms[(0, 0)] + 3) < 1e-14 and abs(ep.terms[(0, 6)] - 3) < 1e-14


def test_cubics_frozen_and_gauge_decay():
    sol = flow_exact(cubic_pair(), OM1, 6)
    assert sol.coefficient(MultiIndex((3,), (0,))) == ExpPoly.constant(1.0)
    h1 = sol.hamiltonian_at(1.0, gauge="H")
    assert abs(h1.coeff(MultiIndex((3,), (0,))) - math.exp(-3)) < 1e-14
    assert check_reality(sol, [0.0, 0.7, 2.5])


def test_initial_condition_reproduced():
    H = cubic_pair()
    sol = flow_exact(H, OM1, 6)
    at0 = sol.hamiltonian_at(0.0, gauge="H")
    for k, cv in H.coeffs.items():
        assert abs(at0.coeff(k) - cv) < 1e-14


def test_normal_form_limit_and_order():
    sol = flow_exact(cubic_pair(), OM1, 6)
    nf = normal_form_limit(sol)
    assert nf.r == 4
    assert abs(nf.N_diamond.coeff(K22) + 3) < 1e-14
    bnf = birkhoff_oracle(cubic_pair(), OM1, 6)
    for k, c in bnf.coeffs.items():
        if all(a == 0 for a in k.kprime):
            assert abs(c - nf.N_diamond.coeff(k)) < 1e-10


def test_resonant_only_input_is_fixed():
    H = FormalSeries(1, 8, {K22: 0.3, MultiIndex((3,), (3,)): -0.1})
    sol = flow_exact(H, OM1, 8)
    for k, ep in sol.calH.items():
        assert set(ep.terms) == {(0, 0)}
        assert ep.terms[(0, 0)] == H.coeff(k)


def test_numeric_oracle_n1():
    H = cubic_pair()
    sol = flow_exact(H, OM1, 6)
    grid = [0.0, 0.5, 1.0, 2.0]
    num = flow_numeric(H, OM1, 6, grid, step=1e-3)
    worst = 0.0
    for d in grid:
        exact = sol.hamiltonian_at(d, gauge="calH")
        for k in set(exact.coeffs) | set(num[d].coeffs):
            worst = max(worst, abs(exact.coeff(k) - num[d].coeff(k)))
    assert worst < 1e-9


def test_numeric_oracle_golden_float():
    phi = (1 + math.sqrt(5)) / 2
    om = Frequency([1.0, phi])
    H = FormalSeries(2, 5, {
        MultiIndex((3, 0), (0, 0)): 0.4 - 0.1j, MultiIndex((0, 0), (3, 0)): 0.4 + 0.1j,
        MultiIndex((1, 1), (0, 1)): -0.2 + 0.3j, MultiIndex((0, 1), (1, 1)): -0.2 - 0.3j,
        MultiIndex((1, 0), (1, 1)): 0.6 + 0.0j, MultiIndex((1, 1), (1, 0)): 0.6 + 0.0j,
    })
    sol = flow_exact(H, om, 5)
    num = flow_numeric(H, om, 5, [0.5, 1.5], step=5e-4)
    worst = 0.0
    for d in (0.5, 1.5):
        exact = sol.hamiltonian_at(d, gauge="calH")
        for k in set(exact.coeffs) | set(num[d].coeffs):
            worst = max(worst, abs(exact.coeff(k) - num[d].coeff(k)))
    assert worst < 1e-9
    assert check_reality(sol, [0.0, 1.0])
    nf = normal_form_limit(sol)
    # action monomials are resonant for every frequency, so r = 4 generically
    assert nf.r == 4
    assert all(rate > 0.01 for rate in nf.residuals.values())


def test_vanishing_order_enforced():
    with pytest.raises(ValueError):
        flow_exact(FormalSeries(1, 6, {MultiIndex((1,), (1,)): 1.0}), OM1, 6)
    with pytest.raises(DimensionMismatchError):
        flow_exact(cubic_pair(), Frequency([1, 1]), 6)


def test_fitted_rate_absorbs_polynomial_prefactor():
    g = [2 + 0.25 * i for i in range(17)]
    assert abs(fitted_decay_rate([d * d * math.exp(-3 * d) for d in g], g) - 3) < 1e-8
    assert abs(fitted_decay_rate([5 * math.exp(-0.7 * d) for d in g], g) - 0.7) < 1e-10


def test_hamiltonian_at_unknown_gauge():
    sol = flow_exact(cubic_pair(), OM1, 6)
    with pytest.raises(ValueError):
        sol.hamiltonian_at(1.0, gauge="N")
