"""Acceptance gate: one test per certified behavior, run with -v for the
per-criterion pass/fail lines."""

import cmath
import math
import random
import time
from fractions import Fraction

import pytest

from normflow.algebra import (FormalSeries, MultiIndex, norm_upper_estimate,
                              poisson_bracket, series_add, series_mul)
from normflow.flow import (DECAY_FIT_GRID, birkhoff_oracle, check_reality,
                           fitted_decay_rate, flow_exact, flow_numeric,
                           normal_form_limit)
from normflow.majorant import (analyticity_bounds, burgers_analyticity_radius,
                               burgers_solve, degenerate_bounds, majorant_flow,
                               verify_domination)
from normflow.resonance import Frequency, corank1_decompose, sigma_omega
from normflow.scheduler import (b_from_a, choose_initial_bounds, convexity_inequalities,
                                corank1_split, make_a_sequence, normalize_low_orders)
from conftest import PRESETS, preset_problem

OM11 = Frequency([1, 1])


def _random_series(rng, n, K, max_terms):
    pool = set()
    for _ in range(120):
        parts = [0] * (2 * n)
        for _ in range(rng.choice([3, 4])):
            parts[rng.randrange(2 * n)] += 1
        pool.add(MultiIndex(tuple(parts[:n]), tuple(parts[n:])))
    picks = rng.sample(sorted(pool), min(max_terms, len(pool)))
    return FormalSeries(n, K, {k: complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                               for k in picks})


def test_criterion_01_bracket_identities():
    rng = random.Random(2024)
    t0 = time.monotonic()
    for _ in range(50):
        n = rng.choice([1, 2, 3])
        F = _random_series(rng, n, 8, 5)
        G = _random_series(rng, n, 8, 5)
        H = _random_series(rng, n, 8, 5)
        anti = series_add(poisson_bracket(F, G), poisson_bracket(G, F))
        assert anti.max_abs_coeff() < 1e-10
        leib = poisson_bracket(F, series_mul(G, H)) - series_add(
            series_mul(poisson_bracket(F, G), H), series_mul(G, poisson_bracket(F, H)))
        assert leib.max_abs_coeff() < 1e-10
        jac = series_add(series_add(
            poisson_bracket(F, poisson_bracket(G, H)),
            poisson_bracket(G, poisson_bracket(H, F))),
            poisson_bracket(H, poisson_bracket(F, G)))
        assert jac.max_abs_coeff() < 1e-10
    assert time.monotonic() - t0 < 30.0


def test_criterion_02_flow_matches_rk4(flows8):
    grid = [0.5, 1.0, 2.0, 5.0]
    runs = [("one-one-resonance", 6, 3e-4), ("golden-mean", 5, 5e-4),
            ("henon-heiles-like", 6, 3e-4)]
    for name, K, step in runs:
        H, omega = preset_problem(name, K)
        sol = flow_exact(H, omega, K)
        num = flow_numeric(H, omega, K, grid, step=step)
        worst = 0.0
        for d in grid:
            exact = sol.hamiltonian_at(d, gauge="calH")
            for k in set(exact.coeffs) | set(num[d].coeffs):
                worst = max(worst, abs(exact.coeff(k) - num[d].coeff(k)))
        assert worst < 1e-7, (name, worst)
    # degree-3 coefficients are constant exactly, not just numerically
    for name in PRESETS:
        H, omega, sol = flows8[name]
        for k, cv in H.coeffs.items():
            assert sol.coefficient(k).terms == {(0, 0): complex(cv)}


def test_criterion_03_normal_form_equals_birkhoff(flows8):
    for name in ("golden-mean", "one-one-resonance"):
        H, omega, sol = flows8[name]
        nf = normal_form_limit(sol)
        bnf = birkhoff_oracle(H, omega, 6)
        for k, cv in bnf.coeffs.items():
            if k.degree <= 6 and sigma_omega(omega, k.kprime)[0] == 0:
                assert abs(nf.N_diamond.coeff(k) - cv) < 1e-8, (name, k)
        for k, cv in nf.N_diamond.coeffs.items():
            if k.degree <= 6:
                assert abs(bnf.coeff(k) - cv) < 1e-8, (name, k)


def test_criterion_04_nonresonant_decay_rates(flows8):
    # at K = 4 no resonant partner can feed a stored index, so every
    # nonresonant trajectory keeps its pure divisor rate on [2, 6]
    from normflow.exppoly import ep_eval
    grid = list(DECAY_FIT_GRID)
    assert grid[0] == 2.0 and grid[-1] == 6.0
    for name in PRESETS:
        H, omega = preset_problem(name, 4)
        sol = flow_exact(H, omega, 4)
        checked = 0
        for k, ep in sol.calH.items():
            div = float(sol.divisors[k])
            if div == 0.0:
                continue
            vals = [abs(ep_eval(ep, d)) * math.exp(-div * d) for d in grid]
            assert fitted_decay_rate(vals, grid) >= div - 0.05, (name, k)
            checked += 1
        assert checked >= 10
    # initial cubics are never driven, so their rates stay exact at K = 8 too
    H, omega, sol = flows8["one-one-resonance"]
    for k in H.coeffs:
        div = float(sol.divisors[k])
        vals = [abs(ep_eval(sol.calH[k], d)) * math.exp(-div * d) for d in grid]
        assert abs(fitted_decay_rate(vals, grid) - div) < 1e-9


def test_criterion_05_majorant_domination(flows8):
    grid = [0.0, 0.5, 1.0, 2.0, 5.0]
    for name in PRESETS:
        H, omega, sol = flows8[name]
        mf = majorant_flow(H, 0.4, 8)
        report = verify_domination(sol, mf.as_map(sol.support()), grid)
        assert report.ok, (name, report.witness)
        assert all(k.degree <= 8 for k, *_ in report.rows)
        assert len(report.rows) == len(sol.support()) * len(grid)


def test_criterion_06_analyticity_bound_identity(flows8):
    rng = random.Random(61)
    for _ in range(100):
        h = math.exp(rng.uniform(-1, 2))
        rho = math.exp(rng.uniform(-1, 1))
        n = rng.choice([1, 2, 3])
        delta = rng.uniform(0, 5)
        rad, bnd = analyticity_bounds(h, rho, n, delta)
        a, b, tau = 2 * h * rho, rho / 2, 8 * n * delta
        direct = h * rho ** 3 / (4 * (1 + 32 * n * h * rho * delta) ** 3)
        via_abt = a * b * b / (2 * (1 + 2 * a * tau) ** 3)
        assert abs(direct - via_abt) <= 1e-14 * direct
        assert abs(bnd - direct) <= 1e-14 * direct
        assert abs(rad - b / (2 * (1 + 2 * a * tau))) <= 1e-14 * rad
    # sampled truncated Hamiltonian stays under the bound plus a geometric tail
    H, omega, sol = flows8["henon-heiles-like"]
    rho, delta = 0.5, 1.0
    h = norm_upper_estimate(H, rho)
    rad, bnd = analyticity_bounds(h, rho, H.n, delta)
    evolved = sol.hamiltonian_at(delta, gauge="H")
    masses = {}
    for k, cv in evolved.coeffs.items():
        masses[k.degree] = masses.get(k.degree, 0.0) + abs(cv) * rad ** k.degree
    degs = sorted(masses)
    ratios = [masses[d2] / masses[d1] for d1, d2 in zip(degs, degs[1:]) if masses[d1] > 0]
    q = max(ratios)
    assert q < 1.0
    tail = masses[degs[-1]] * q / (1 - q)
    for _ in range(50):
        z = [rad * rng.uniform(0.2, 1.0) * cmath.exp(2j * math.pi * rng.random())
             for _ in range(H.n)]
        val = sum(cv * math.prod(zj ** kj for zj, kj in zip(z, k.k))
                  * math.prod(zj.conjugate() ** kj for zj, kj in zip(z, k.kbar))
                  for k, cv in evolved.coeffs.items())
        assert abs(val) <= bnd + tail + 1e-12


def test_criterion_07_burgers_fixed_point():
    rng = random.Random(71)
    for _ in range(100):
        a = math.exp(rng.uniform(-1, 1))
        b = math.exp(rng.uniform(-1, 1))
        tau = rng.uniform(0, 3)
        radius = burgers_analyticity_radius(a, b, tau)
        zeta = 0.8 * radius * rng.random() * cmath.exp(2j * math.pi * rng.random())
        G = burgers_solve(a, b, tau, zeta)
        res = G - a * (zeta + tau * G) ** 2 / (b - zeta - tau * G)
        assert abs(res) < 1e-10 * max(1.0, abs(G))
        cap = a * b / (1 + 2 * a * tau) ** 2
        small = b / (2 * (1 + 2 * a * tau))
        for rfac in (0.25, 0.75, 1.0):
            zz = rfac * small * cmath.exp(2j * math.pi * rng.random())
            assert abs(burgers_solve(a, b, tau, zz)) <= cap + 1e-12


def test_criterion_08_degenerate_scaling_exponents():
    import numpy as np
    taus = [10.0 * 10 ** (i / 2) for i in range(7)]  # up to 1e4
    for r in (3, 4, 5):
        rads = [degenerate_bounds(1.0, 1.0, r, t).radius for t in taus]
        gbs = [degenerate_bounds(1.0, 1.0, r, t).g_bound for t in taus]
        slope_r = np.polyfit(np.log(taus), np.log(rads), 1)[0]
        slope_g = np.polyfit(np.log(taus), np.log(gbs), 1)[0]
        assert abs(slope_r + 1.0 / (r - 2)) < 0.05, (r, slope_r)
        assert abs(slope_g + 1.0 + 1.0 / (r - 2)) < 0.05, (r, slope_g)


def test_criterion_09_sequence_machinery():
    pair = b_from_a([math.e] * 5, 4)
    assert pair.s_max == 34
    assert all(abs(pair.value(s) + 1.0) < 1e-12 for s in range(3, 35))
    seqs = [[math.e] * 5, [math.exp(j) for j in range(5)],
            list(make_a_sequence(OM11, 2, 4))]
    for a in seqs:
        p = b_from_a(a, 4)
        assert p.s_max == 34
        for j in range(5):
            assert abs(math.log(a[j]) - (p.anchor(j + 1) - 2 * p.anchor(j))) < 1e-12
        assert convexity_inequalities(p, tol=1e-12)
        for J in range(1, 5):
            want = 2.0 ** (J - 1) * (math.log(a[J]) - math.log(a[J - 1]))
            assert abs(p.anchor_convexity(J) - want) < 1e-12 * max(1.0, abs(want))


def test_criterion_10_pipeline_certificates(flows8):
    for name in ("one-one-resonance", "henon-heiles-like"):
        H, omega, sol = flows8[name]
        pair = b_from_a(make_a_sequence(omega, 2, 2))
        c0, alpha0 = choose_initial_bounds(H, pair)
        assert abs(c0 * math.exp(2 * alpha0) - 1.0 / 16) < 1e-13
        G, certs = normalize_low_orders(H, omega, 4, c0, alpha0, pair, 8)
        assert certs
        for cert in certs:
            assert cert.eps <= 2.0 ** (-cert.m - 2) + 1e-12
            assert cert.band_residual < 1e-10
        assert math.fsum(c.eps for c in certs) <= 0.5
        assert certs[-1].rho >= math.exp(-alpha0) * math.exp(-0.5) * (1 - 1e-12)
        nf = normal_form_limit(sol)
        for k, cv in nf.N_diamond.coeffs.items():
            if k.degree == 4:
                assert abs(G.coeffs.get(k, 0j) - cv) < 1e-8, (name, k)
        for k, cv in G.coeffs.items():
            if k.degree == 4 and sigma_omega(omega, k.kprime)[0] == 0:
                assert abs(nf.N_diamond.coeffs.get(k, 0j) - cv) < 1e-8, (name, k)


def test_criterion_11_corank1_split(flows8):
    H, omega, sol = flows8["one-one-resonance"]
    data = corank1_decompose(omega)
    assert data.lam_over_p == 1.0
    sp = corank1_split(sol, data, 1.0)
    grid = [1.0 + 0.5 * i for i in range(11)]
    vals = [norm_upper_estimate(sp.gstar_at(d), 1.0) for d in grid]
    assert fitted_decay_rate(vals, grid) >= data.lam_over_p - 0.05
    # a fully resonant input is a fixed point: its split has constant g0
    resH = FormalSeries(2, 6, {MultiIndex((2, 0), (0, 2)): 0.25,
                               MultiIndex((0, 2), (2, 0)): 0.25,
                               MultiIndex((1, 1), (1, 1)): 0.5,
                               MultiIndex((2, 0), (2, 0)): 0.3})
    rsol = flow_exact(resH, OM11, 6)
    for delta in (0.0, 1.0, 2.5, 4.0):
        spr = corank1_split(rsol, data, delta)
        assert not spr.gstar.coeffs
        for k, cv in resH.coeffs.items():
            assert abs(spr.g0.coeff(k) - cv) < 1e-12


def test_criterion_12_reality_preservation(flows8):
    samples = [0.0, 0.7, 1.5, 3.0]
    for name in PRESETS:
        H, omega = preset_problem(name, 7)
        assert H.reality_defect() == 0.0
        sol = flow_exact(H, omega, 7)
        assert check_reality(sol, samples, tol=1e-10), name
        # at K = 8 individual exp-polynomial terms reach ~1e6, so closure is
        # checked termwise there: calH_{k*} = conj(calH_k) at matching rates
        H8, omega8, sol8 = flows8[name]
        for k, ep in sol8.calH.items():
            partner = sol8.calH[k.star()].terms
            for key in set(ep.terms) | set(partner):
                c = ep.terms.get(key, 0j)
                cp = partner.get(key, 0j)
                err = abs(complex(c).conjugate() - cp)
                assert err <= 1e-10 * max(1.0, abs(c), abs(cp)), (name, k, key)
        pair = b_from_a(make_a_sequence(omega8, 2, 2))
        if name != "golden-mean":
            c0, alpha0 = choose_initial_bounds(H8, pair)
            G, _ = normalize_low_orders(H8, omega8, 4, c0, alpha0, pair, 8)
            assert G.reality_defect() < 1e-10
