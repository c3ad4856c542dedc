from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from hardyrec.certified import range_enumerate
from hardyrec.expr import parse
from hardyrec.patterns import (
    AnchorNotFound,
    APBlock,
    certify_pattern,
    default_eps,
    find_anchor,
    mine_patterns,
    recheck_anchor,
    rescale_progressions,
)

X32 = parse("x^(3/2)")


def _scan_oracle(m, eps, lo, hi):
    """First n with [1.5 sqrt n] = m, {1.5 sqrt n} <= eps, {n^1.5} <= eps, from exact integer roots."""
    for n in range(lo, hi + 1):
        # 1.5 sqrt(n) = sqrt(9n/4); its floor and a fractional-part test via isqrt
        d = math.isqrt(9 * n // 4) if (9 * n) % 4 == 0 else None
        v = Fraction(3, 2) * Fraction(math.isqrt(n * 10**40), 10**20)  # 20-digit lower estimate
        if math.floor(v) != m or v - m > eps:
            continue
        w = Fraction(math.isqrt(n**3 * 10**40), 10**20)
        if w - math.floor(w) <= eps:
            return n
    return None


def test_anchor_example_m30():
    an = find_anchor(X32, 1, 1, 30, Fraction(1, 10))
    assert an.n_anchor == _scan_oracle(30, Fraction(1, 10), 390, 440)
    assert an.floors[1] == 30 and recheck_anchor(X32, an)


def test_certificate_example_m30():
    an = find_anchor(X32, 1, 1, 30, Fraction(1, 10))
    cert = certify_pattern(X32, 1, an, 100)
    assert cert.N >= 3
    start = range_enumerate(X32, an.n_anchor, an.n_anchor)[0]
    assert cert.progression() == [start + 30 * n for n in range(1, cert.N + 1)]


def test_five_halves_quadratic_progression():
    a = parse("x^(5/2)")
    rep = mine_patterns(a, 1, range(5, 40), k=2, N_try=50)
    assert any(c.N >= 2 for c in rep.certificates)
    for c in rep.certificates:
        assert c.k == 2
        vals = set(range_enumerate(a, c.anchor.n_anchor + 1, c.anchor.n_anchor + c.N))
        assert all(v in vals for v in c.progression())


def test_zero_length_verification_rejected():
    an = find_anchor(X32, 1, 1, 30, Fraction(1, 10))
    with pytest.raises(ValueError):
        certify_pattern(X32, 1, an, 0)


def test_empty_range():
    rep = mine_patterns(X32, 1, [])
    assert rep.certificates == [] and rep.failures == []


@pytest.mark.parametrize("text,r", [("x^(3/2)", 1), ("x^(3/2)", 2), ("x^(3/2)", 3), ("x*log(x)", 1), ("x*log(x)", 2)])
def test_certificates_sound(text, r):
    a = parse(text)
    rep = mine_patterns(a, r, range(10, 40), k=1, N_try=60)
    assert rep.certificates
    for c in rep.certificates:
        assert recheck_anchor(a, c.anchor)
        assert all(v % r == 0 for v in c.progression())
        vals = set(range_enumerate(a, c.anchor.n_anchor + 1, c.anchor.n_anchor + c.N))
        assert all(v in vals for v in c.progression())


def test_xlogx_anchor_is_first_in_window():
    # brute-force the window for a modest m and compare with the jumping search
    a = parse("x*log(x)")
    an = find_anchor(a, 1, 2, 4, Fraction(1, 3))
    from hardyrec.patterns import _anchor_test

    lo = next(n for n in range(2, 10**5) if math.log(n) + 1 >= 8)
    first = next(n for n in range(lo, an.n_anchor + 1) if _anchor_test(a, 1, 2, 4, Fraction(1, 3), n) is not None)
    assert first == an.n_anchor


def test_search_cap_reported():
    with pytest.raises(AnchorNotFound) as info:
        find_anchor(parse("x^(5/2)"), 2, 2, 11, Fraction(1, 100), search_cap=3)
    assert info.value.scanned <= 3


def test_default_eps():
    assert default_eps(10) == Fraction(1, 3)
    assert default_eps(200) == Fraction(1, 6)


def test_jobs_do_not_change_results():
    a = parse("x^(3/2)")
    r1 = mine_patterns(a, 2, range(10, 60), jobs=1)
    r4 = mine_patterns(a, 2, range(10, 60), jobs=4)
    assert r1.certificates == r4.certificates and r1.failures == r4.failures


def test_degenerate_k0():
    a = parse("log(x)^2")
    rep = mine_patterns(a, 1, range(3, 8), k=0)
    for c in rep.certificates:
        assert set(c.progression()) == {c.m}
        assert c.m in range_enumerate(a, c.anchor.n_anchor + 1, c.anchor.n_anchor + 1)


def test_rescale_example():
    (b,) = rescale_progressions([APBlock(5, 3, 100)], 2)
    assert (b.c, b.m) == (4, 3)
    assert all(2 * v in APBlock(5, 3, 100) for v in b.elements())


@given(st.integers(-50, 50), st.integers(1, 30), st.integers(1, 200))
def test_rescale_identity(c, m, N):
    (b,) = rescale_progressions([APBlock(c, m, N)], 1)
    assert (b.c, b.m) == (c, m)
    assert set(b.elements()) <= set(APBlock(c, m, N).elements())


@given(st.integers(-40, 40), st.integers(1, 30), st.integers(1, 300), st.integers(1, 9))
def test_rescale_membership(c, m, N, r):
    if c % math.gcd(m, r):
        with pytest.raises(ValueError):
            rescale_progressions([APBlock(c, m, N)], r)
        return
    (b,) = rescale_progressions([APBlock(c, m, N)], r)
    src = APBlock(c, m, N)
    assert all(r * v in src for v in b.elements())


@given(st.integers(1, 6), st.integers(-20, 20), st.integers(1, 20), st.integers(1, 300))
def test_rescale_divisible_branch(r, c0, m0, N):
    (b,) = rescale_progressions([APBlock(r * c0, r * m0, N)], r)
    assert b.c == c0
    assert b.m == r * m0 and all(r * v in APBlock(r * c0, r * m0, N) for v in b.elements())
