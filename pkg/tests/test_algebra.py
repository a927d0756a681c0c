"""Series arithmetic and Poisson bracket tests."""

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normflow.algebra import (FormalSeries, MultiIndex, cauchy_coeff_bound,
                              check_cauchy_bounds, norm_upper_estimate, poisson_bracket,
                              project_sign_class, series_add, series_mul)
from normflow.errors import DimensionMismatchError
from normflow.resonance import Frequency


def test_multiindex_basics():
    k = MultiIndex((3,), (1,))
    assert k.n == 1 and k.degree == 4
    assert k.kprime == (-2,)
    assert k.star() == MultiIndex((1,), (3,))
    assert k.star().star() == k
    assert MultiIndex((2, 0), (1, 1)).multinomial() == math.factorial(4) // (2 * 1 * 1)
    assert MultiIndex.unit(2, 1) == MultiIndex((0, 1), (0, 1))


def test_multiindex_make_rejects_bad_input():
    with pytest.raises(ValueError):
        MultiIndex.make([1, -1], [0, 0])
    with pytest.raises(ValueError):
        MultiIndex.make([1], [0, 0])


def test_bracket_action_coordinates():
    z = FormalSeries(1, 8, {MultiIndex((1,), (0,)): 1.0})
    zbar = FormalSeries(1, 8, {MultiIndex((0,), (1,)): 1.0})
    act = poisson_bracket(series_mul(z, zbar), z)
    assert act.coeffs == {MultiIndex((1,), (0,)): 1j}


def test_bracket_h2_eigenvalue():
    # {H2, z^k} = -i <omega, k'> z^k, the divisor that drives the flow
    om = Frequency([Fraction(1)])
    z = FormalSeries(1, 8, {MultiIndex((1,), (0,)): 1.0})
    zbar = FormalSeries(1, 8, {MultiIndex((0,), (1,)): 1.0})
    H2 = series_mul(z, zbar)
    k = MultiIndex((3,), (1,))
    br = poisson_bracket(H2, FormalSeries(1, 8, {k: 1.0}))
    assert abs(br.coeff(k) - (-1j) * float(om.inner(k.kprime))) < 1e-15


def test_mul_binomial():
    a = FormalSeries(2, 8, {MultiIndex((1, 0), (0, 0)): 1.0})
    b = FormalSeries(2, 8, {MultiIndex((0, 0), (0, 1)): 1.0})
    sq = series_mul(series_add(a, b), series_add(a, b))
    assert sq.coeff(MultiIndex((2, 0), (0, 0))) == 1
    assert sq.coeff(MultiIndex((1, 0), (0, 1))) == 2
    assert sq.coeff(MultiIndex((0, 0), (0, 2))) == 1


def test_truncation_flag_and_pruning():
    cube = FormalSeries(1, 4, {MultiIndex((3,), (0,)): 1.0})
    prod = series_mul(cube, cube)
    assert prod.coeffs == {} and prod.truncation_touched
    same = series_add(cube, cube.scale(-1.0))
    assert same.coeffs == {} and not same.truncation_touched


def test_dimension_mismatch():
    a = FormalSeries(1, 6, {MultiIndex((3,), (0,)): 1.0})
    b = FormalSeries(2, 6, {MultiIndex((3, 0), (0, 0)): 1.0})
    for op in (series_add, series_mul, poisson_bracket):
        with pytest.raises(DimensionMismatchError):
            op(a, b)


def test_sign_class_projection():
    om = Frequency([2, -1])
    zero = FormalSeries(2, 8, {MultiIndex((1, 1), (1, 1)): 1.0})
    plus = FormalSeries(2, 8, {MultiIndex((0, 0), (3, 0)): 1.0})
    H = series_add(zero, plus)
    assert project_sign_class(H, om, "zero").coeffs == zero.coeffs
    assert project_sign_class(H, om, "plus").coeffs == plus.coeffs
    assert project_sign_class(H, om, "minus").coeffs == {}
    with pytest.raises(ValueError):
        project_sign_class(H, om, "both")


def test_cauchy_bounds():
    k = MultiIndex((3,), (0,))
    assert cauchy_coeff_bound(1.0, 0.5, k) == 8.0
    F = FormalSeries(1, 8, {k: 1.0})
    assert check_cauchy_bounds(F, 0.5 ** 3 * 8, 0.5)
    assert not check_cauchy_bounds(F, 0.5 ** 3 / 2, 0.5)
    assert norm_upper_estimate(F, 0.5) == 0.125


def test_reality_defect():
    sym = FormalSeries(1, 8, {MultiIndex((3,), (0,)): 1 + 2j,
                              MultiIndex((0,), (3,)): 1 - 2j})
    assert sym.reality_defect() == 0.0
    assert FormalSeries(1, 8, {MultiIndex((3,), (0,)): 1 + 2j}).reality_defect() > 1


def test_json_terms_roundtrip():
    F = FormalSeries(2, 6, {MultiIndex((2, 0), (0, 1)): 0.5 - 0.25j,
                            MultiIndex((0, 1), (2, 0)): 0.5 + 0.25j})
    back = FormalSeries.from_json_terms(2, 6, F.to_json_terms())
    assert back == F


def _random_series(rng, n, K, degrees, terms):
    pool = []
    for _ in range(200):
        parts = [0] * (2 * n)
        deg = rng.choice(degrees)
        for _ in range(deg):
            parts[rng.randrange(2 * n)] += 1
        pool.append(MultiIndex(tuple(parts[:n]), tuple(parts[n:])))
    picks = rng.sample(sorted(set(pool)), min(terms, len(set(pool))))
    return FormalSeries(n, K, {k: complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                               for k in picks})


def test_bracket_antisymmetry_random():
    rng = random.Random(11)
    for _ in range(10):
        n = rng.choice([1, 2])
        F = _random_series(rng, n, 8, [3, 4], 4)
        G = _random_series(rng, n, 8, [3, 4], 4)
        anti = series_add(poisson_bracket(F, G), poisson_bracket(G, F))
        assert anti.max_abs_coeff() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 30))
def test_bracket_leibniz_property(seed):
    rng = random.Random(seed)
    F = _random_series(rng, 2, 10, [3], 3)
    G = _random_series(rng, 2, 10, [3], 3)
    H = _random_series(rng, 2, 10, [3, 4], 3)
    lhs = poisson_bracket(F, series_mul(G, H))
    rhs = series_add(series_mul(poisson_bracket(F, G), H),
                     series_mul(G, poisson_bracket(F, H)))
    assert (lhs - rhs).max_abs_coeff() < 1e-12
