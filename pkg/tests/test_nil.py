from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from flint import arb, ctx
from hypothesis import given, strategies as st

from hardyrec.equidist import discrepancy
from hardyrec.expr import parse
from hardyrec.nil import (
    AffineMap,
    HeisenbergElement,
    TorusPoly,
    affine_iterate,
    affine_orbit,
    heisenberg_inv,
    heisenberg_mul,
    identity,
    make_schedule,
    nil_cesaro_average,
    nil_power,
    nil_power_iterated,
    reduce_mod_lattice,
    to_affine,
)

fracs = st.fractions(min_value=-50, max_value=50, max_denominator=1000)
elements = st.builds(HeisenbergElement, st.integers(-20, 20), fracs, fracs)


@given(elements, elements, elements)
def test_associative(g, h, k):
    assert (g * h) * k == g * (h * k)


@given(elements)
def test_identity_and_inverse(g):
    assert identity() * g == g == g * identity()
    assert g * heisenberg_inv(g) == identity() == heisenberg_inv(g) * g


def test_group_axioms_on_ten_thousand_random_triples():
    rng = np.random.default_rng(7)
    for _ in range(10**4):
        m = [int(v) for v in rng.integers(-99, 100, 3)]
        x = [Fraction(int(p), int(q)) for p, q in zip(rng.integers(-999, 1000, 6), rng.integers(1, 1000, 6))]
        g, h, k = (HeisenbergElement(m[i], x[2 * i], x[2 * i + 1]) for i in range(3))
        assert heisenberg_mul(heisenberg_mul(g, h), k) == heisenberg_mul(g, heisenberg_mul(h, k))
        assert heisenberg_mul(g, heisenberg_inv(g)) == identity()


def test_law_examples():
    a, b = Fraction(2, 7), Fraction(3, 11)
    g = HeisenbergElement(1, a, b)
    assert g * g == HeisenbergElement(2, 2 * a, 2 * b + a)
    assert nil_power(g, 3) == HeisenbergElement(3, 3 * a, 3 * b + 3 * a)
    assert nil_power(g, 0) == identity()


@given(elements, st.integers(-60, 60))
def test_power_closed_form(g, n):
    assert nil_power(g, n) == nil_power_iterated(g, n)


def test_power_closed_form_large_n():
    g = HeisenbergElement(3, Fraction(5, 13), Fraction(-7, 17))
    assert nil_power(g, 10**5) == nil_power_iterated(g, 10**5)


@given(elements)
def test_lattice_reduction(g):
    r = reduce_mod_lattice(g)
    assert 0 <= r.x1 < 1 and 0 <= r.x2 < 1 and r.m == g.m
    # r = g * gamma for an integer lattice element gamma
    gamma = heisenberg_inv(g) * r
    assert gamma.m == 0 and gamma.x1.denominator == 1 and gamma.x2.denominator == 1


def test_to_affine_examples():
    assert to_affine(identity()) == AffineMap(((1, 0), (0, 1)), (0, 0))
    a = parse("sqrt2")
    S = to_affine(HeisenbergElement(2, a, a))
    assert S.linear == ((1, 0), (2, 1)) and S.translation == (a, a)


def test_non_unipotent_rejected():
    with pytest.raises(ValueError):
        AffineMap(((2, 0), (0, 1)), (0, 0))


def test_identity_orbit_is_constant():
    S = AffineMap(((1, 0), (0, 1)), (0, 0))
    pts = affine_orbit(S, (Fraction(1, 3), Fraction(2, 5)), [0, 5, 10**9])
    assert all(p[0].contains(Fraction(1, 3).__float__()) or p[0].overlaps(arb(1) / 3) for p in pts)


@pytest.mark.parametrize("j", [1, 17, 1000])
def test_orbit_closed_form_matches_iteration(j):
    S = to_affine(HeisenbergElement(1, parse("sqrt2"), parse("sqrt3")))
    x0 = (Fraction(1, 7), Fraction(2, 9))
    (p,) = affine_orbit(S, x0, [j])
    q = affine_iterate(S, x0, j)
    with ctx.workprec(256):
        for u, v in zip(p, q):
            assert abs(float((u - v).mid())) < 1e-20 and (u - v).rad() < 1e-20


@pytest.mark.slow
def test_orbit_closed_form_at_one_million():
    S = to_affine(HeisenbergElement(2, parse("sqrt2"), parse("sqrt3")))
    x0 = (Fraction(1, 7), Fraction(2, 9))
    (p,) = affine_orbit(S, x0, [10**6])
    q = affine_iterate(S, x0, 10**6)
    with ctx.workprec(256):
        for u, v in zip(p, q):
            d = u - v
            assert abs(float(d.mid())) < 1e-20 and float(d.rad()) < 1e-20


def test_rotation_orbit_discrepancy():
    S = AffineMap(((1,),), (parse("phi"),))
    pts = affine_orbit(S, (0,), range(1, 10**4 + 1), prec=128)
    assert discrepancy([float(p[0]) for p in pts])[0] < 3 * np.log(10**4) / 10**4


def test_constant_function_average():
    res = nil_cesaro_average(TorusPoly.one(), HeisenbergElement(1, parse("sqrt2"), parse("sqrt3")), make_schedule(50))
    assert res.average == pytest.approx(1) and res.gap == pytest.approx(0, abs=1e-12)


def test_u64_orbit_matches_certified_orbit():
    from hardyrec._fixed import FixedConst, u64_to_unit
    from hardyrec.nil import _orbit_u64

    a = HeisenbergElement(3, parse("sqrt2"), parse("sqrt3"))
    e = np.array([1, 2, 99, 12345, 10**6, 2 * 10**9], dtype=np.int64)
    t1, t2 = _orbit_u64(FixedConst(a.x1), FixedConst(a.x2), a.m, e)
    # a^e Gamma seen from the identity coset: reduce the exact power mod the lattice
    S = to_affine(a)
    pts = affine_orbit(S, (0, 0), [int(v) for v in e], prec=256)
    for (u1, u2), v1, v2 in zip(pts, u64_to_unit(t1), u64_to_unit(t2)):
        for u, v in ((u1, v1), (u2, v2)):
            d = abs(float(u.mid()) - float(v))
            assert min(d, 1 - d) < 1e-6


def test_schedule_is_seeded():
    assert make_schedule(20, 2, seed=5) == make_schedule(20, 2, seed=5)
    assert make_schedule(20, 2, seed=5) != make_schedule(20, 2, seed=6)


def test_decreasing_tail_rejected():
    from hardyrec.nil import Schedule

    sched = Schedule(tuple((0,) for _ in range(9)), (1, 2, 3, 4, 5, 6, 9, 8, 7))
    with pytest.raises(ValueError):
        nil_cesaro_average(TorusPoly.character(1), HeisenbergElement(1, parse("sqrt2"), parse("sqrt3")), sched)


def test_ergodic_average_decays():
    a = HeisenbergElement(1, parse("sqrt2"), parse("sqrt3"))
    F = TorusPoly.character(1)
    vals = [abs(nil_cesaro_average(F, a, make_schedule(M, seed=0)).average) for M in (50, 100, 200, 400)]
    assert vals[-1] < 0.05
    assert all(b <= a_ + 0.02 for a_, b in zip(vals, vals[1:]))
