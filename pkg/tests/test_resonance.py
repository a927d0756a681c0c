"""Frequency vectors, small divisors, and lattice classification."""

import math
from fractions import Fraction

import pytest

from normflow.errors import AmbiguousSignError, NotCorankOneError
from normflow.resonance import (Frequency, corank1_decompose, lattice_rank,
                                omega_capital, sigma_omega)

PHI = (1 + math.sqrt(5)) / 2


def test_sigma_rational():
    om = Frequency([2, -1])
    assert sigma_omega(om, (1, 2)) == (0, 0)
    assert sigma_omega(om, (1, 0)) == (1, 2)
    assert sigma_omega(om, (-1, 0)) == (-1, 2)


def test_sigma_float():
    om = Frequency([1.0, PHI], tol=1e-9)
    s, d = sigma_omega(om, (2, -1))
    assert s == 1 and abs(d - (2 - PHI)) < 1e-15


def test_sigma_float_ambiguous():
    om = Frequency([1.0, 1.0], tol=1e-9)
    with pytest.raises(AmbiguousSignError):
        sigma_omega(om, (1, -1))


def test_declared_lattice():
    om = Frequency([1.0, 1.0], lattice=[[1, -1]], tol=1e-9)
    assert sigma_omega(om, (2, -2)) == (0, 0.0)
    assert sigma_omega(om, (1, 0)) == (1, 1.0)
    om.audit_lattice(10)
    assert om.in_lattice((3, -3)) and not om.in_lattice((1, 0))


def test_omega_capital():
    assert omega_capital(Frequency([2, -1]), 5) == 1.0
    assert omega_capital(Frequency([1, 1]), 1) == 1.0
    om = Frequency([1.0, PHI], tol=1e-9)
    assert abs(omega_capital(om, 3) - 1 / abs(2 - PHI)) < 1e-12


def test_corank1_decompose():
    c = corank1_decompose(Frequency([2, -1]))
    assert (c.q, c.p, c.lam) == ((2, -1), 1, 1)
    c = corank1_decompose(Frequency([Fraction(1, 2), Fraction(1, 3)]))
    assert (c.q, c.p, c.lam) == ((3, 2), 6, 1)
    c = corank1_decompose(Frequency([1, 1]))
    assert (c.q, c.p, c.lam) == ((1, 1), 1, 1)
    assert c.lam_over_p == 1.0
    f = corank1_decompose(Frequency([1.0, 1.0], lattice=[[1, -1]], tol=1e-9))
    assert f.q == (1, 1) and f.p == 1 and abs(f.lam - 1.0) < 1e-12


def test_corank1_requires_rank():
    with pytest.raises(NotCorankOneError):
        corank1_decompose(Frequency([1.0, PHI], tol=1e-9))
    # a declared lattice of rank 1 in n = 3 leaves corank 2
    with pytest.raises(NotCorankOneError):
        corank1_decompose(Frequency([1.0, PHI, 2.0], lattice=[[2, 0, -1]], tol=1e-9))
    # rational frequencies always have full resonance rank
    c = corank1_decompose(Frequency([1, 1, 1]))
    assert (c.q, c.p, c.lam) == ((1, 1, 1), 1, 1)


def test_lattice_rank():
    assert lattice_rank(Frequency([1.0, PHI], tol=1e-9)) == 0
    assert lattice_rank(Frequency([2, -1])) == 1
    assert lattice_rank(Frequency([1, 1, 1])) == 2


def test_json_roundtrip():
    om = Frequency([Fraction(1), Fraction(-3, 2)])
    assert Frequency.from_json(om.to_json()).values == om.values
    omf = Frequency([1.0, PHI], lattice=[], tol=1e-9)
    back = Frequency.from_json(omf.to_json())
    assert back.values == omf.values and back.tol == omf.tol
    with pytest.raises(ValueError):
        Frequency.from_json({"mode": "decimal", "values": [1]})
