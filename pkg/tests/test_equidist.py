from __future__ import annotations

import cmath
import math
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardyrec.equidist import (
    TorusFunction,
    build_intervals,
    cesaro_interval_average,
    density_smallfrac,
    direct_sum,
    discrepancy,
    phase,
    torus_equi_check,
    vdc_bound,
    vdc_input,
    weyl_sum,
)
from hardyrec.expr import parse


def test_three_halves_intervals_match_closed_form():
    seq = build_intervals(parse("x^(3/2)"), 1, Fraction(1, 10), 1, range(1, 121), skip_empty=True)
    assert seq.case == "Case2"
    for m in range(1, 121):
        # 1.5 sqrt(n) in [m, m + 1/10]  <=>  9n >= 4m^2 and 900n <= 4(10m+1)^2
        members = [n for n in range(1, 8000) if 9 * n >= 4 * m * m and 900 * n <= 4 * (10 * m + 1) ** 2]
        rows = [e for e in seq if e.m == m]
        if not members:
            assert m in seq.skipped
        else:
            assert (rows[0].k_m, rows[0].l_m) == (members[0], members[-1])


def test_xlogx_is_case1():
    assert build_intervals(parse("x*log(x)"), 1, Fraction(1, 10), 1, range(1, 10)).case == "Case1"


def test_five_halves_level_sets():
    seq = build_intervals(parse("x^(5/2)"), 2, Fraction(1, 20), 2, range(1, 60), skip_empty=True)
    assert seq.case == "Case2"
    for e in seq:
        # 2m <= (15/4) sqrt(n) <= 2m + 1/20  <=>  225 n >= 64 m^2 and 225*400 n <= 16 (40m+1)^2
        for n in (e.k_m, e.l_m):
            assert 225 * n >= 64 * e.m**2 and 90000 * n <= 16 * (40 * e.m + 1) ** 2
        assert not 225 * (e.k_m - 1) >= 64 * e.m**2 or e.k_m == 1
        assert not 90000 * (e.l_m + 1) <= 16 * (40 * e.m + 1) ** 2


def test_case2_lengths_grow():
    seq = build_intervals(parse("x^(3/2)"), 1, Fraction(1, 10), 1, range(1, 301), skip_empty=True)
    assert seq.lengths_grow()


@pytest.mark.parametrize("N", [1, 7, 100])
def test_discrepancy_examples(N):
    assert discrepancy([0.0] * N)[0] == 1.0
    assert discrepancy([j / N for j in range(N)])[0] == pytest.approx(1 / N)


def test_golden_ratio_discrepancy():
    phi = (1 + 5**0.5) / 2
    pts = [(n * phi) % 1 for n in range(1, 10**4 + 1)]
    assert discrepancy(pts)[0] < 3 * math.log(10**4) / 10**4


@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=60))
def test_discrepancy_1d_matches_brute_force(pts):
    n = len(pts)
    # sup over anchored intervals [0, t) and [0, t], checked at every point
    brute = max(
        max(abs(sum(p < t for p in pts) / n - t), abs(sum(p <= t for p in pts) / n - t)) for t in pts + [1.0]
    )
    assert discrepancy(pts)[0] == pytest.approx(brute, abs=1e-12)


def test_grid_discrepancy_bounds_uniform_grid():
    g = 16
    pts = [((i + 0.5) / g, (j + 0.5) / g) for i in range(g) for j in range(g)]
    val, grid = discrepancy(pts, g=64)
    assert grid == 64 and val <= 4 / g


def test_weyl_examples():
    assert abs(weyl_sum(parse("x/2"), (1, 200))) < 1e-12
    assert abs(weyl_sum(parse("x*phi"), (1, 10**4))) < 1e-3
    assert weyl_sum(parse("x^2"), (1, 100)) == pytest.approx(1)


@given(st.integers(1, 10**9))
def test_phase_against_mpmath(n):
    import mpmath

    mpmath.mp.dps = 60
    v = mpmath.mpf(n) ** mpmath.mpf(1.5)
    want = float(v - mpmath.nint(v))
    assert phase(parse("x^(3/2)"), n) == pytest.approx(want, abs=1e-11)


def test_vdc_linear_phase_rejected():
    with pytest.raises(ValueError, match="rho"):
        vdc_input(parse("x*sqrt2"), 10, 100)


@pytest.mark.parametrize("k,l", [(10, 200), (1000, 3000), (50000, 51000)])
def test_vdc_bound_dominates(k, l):
    f = parse("sqrt2*x^2/1000 + x^(3/2)/7")
    assert abs(direct_sum(f, k, l)) <= vdc_bound(vdc_input(f, k, l))


def _decimal_density(alphas, ks, e, M):
    getcontext().prec = 60
    hits = 0
    for m in range(1, M + 1):
        em = Decimal(e(m))
        ok = False
        for a in alphas:
            for k in ks:
                v = a * m**k
                d = v - v.to_integral_value(rounding="ROUND_FLOOR")
                if min(d, 1 - d) <= em:
                    ok = True
        hits += ok
    return hits / M


def test_density_matches_decimal_oracle():
    getcontext().prec = 60
    alphas = [Decimal(2).sqrt(), Decimal(3).sqrt()]
    e = lambda m: 1 / math.log(m + 2)
    assert density_smallfrac(["sqrt2"], [1], "inv_log", 5000) == _decimal_density(alphas[:1], [1], e, 5000)
    e2 = lambda m: m ** -0.25
    got = density_smallfrac(["sqrt2", "sqrt3"], [1, 2], "power:1/4", 3000)
    assert got == _decimal_density(alphas, [1, 2], e2, 3000)


def test_density_frozen_values():
    assert density_smallfrac(["sqrt2"], [1], "inv_log", 250_000) == pytest.approx(0.176756)
    assert density_smallfrac(["sqrt2", "sqrt3"], [1, 2], "power:1/4", 250_000) == pytest.approx(0.391944)
    assert density_smallfrac(["sqrt2", "sqrt3"], [1, 2], "power:1/4", 10**6) == pytest.approx(0.292732)


def test_density_rejects_constant_schedule_and_rationals():
    with pytest.raises(ValueError):
        density_smallfrac(["sqrt2"], [1], "const:1/2", 100)
    with pytest.raises(ValueError):
        density_smallfrac(["1/2"], [1], "inv_log", 100)


def test_torus_checks():
    v = torus_equi_check("1/2", 1, N=100, delta=0.1)
    assert not v.equidistributed and v.k == 2 and v.norm_k_alpha == 0
    assert torus_equi_check("phi", 1, N=10**4, delta=0.01).equidistributed
    assert torus_equi_check("sqrt2", 2, N=1000, delta=0.05).equidistributed


def test_cesaro_constant_component():
    seq = build_intervals(parse("x^(3/2)"), 1, Fraction(1, 10), 1, range(1, 40), skip_empty=True)
    v = cesaro_interval_average(TorusFunction.character(1), [Fraction(1, 4)], seq, 39)
    assert v == pytest.approx(cmath.exp(2j * math.pi / 4))


def test_cesaro_box_frozen():
    # for m divisible by 3 the interval starts where a(n) is an integer, which biases the box average
    seq = build_intervals(parse("x^(3/2)"), 1, Fraction(1, 10), 1, range(1, 201), skip_empty=True)
    v = cesaro_interval_average(TorusFunction.indicator((0, 0.5)), [parse("x^(3/2)")], seq, 200)
    assert v.real == pytest.approx(0.608, abs=5e-3)
