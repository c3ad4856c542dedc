from __future__ import annotations

import pytest

from hardyrec.expr import differentiate, parse
from hardyrec.growth import check_basic_properties, compare_growth, eventual_sign, growth_exponent

EXAMPLES = [
    ("x^sqrt(2)", 1),
    ("sqrt3*x^(5/2) + x*log(x)", 2),
    ("x^(3/2)", 1),
    ("x*log(x)", 1),
    ("x^2/log(log(x))", 1),
    ("x^(5/2)", 2),
    ("gamma_ln(x+1)", 1),
    ("x^(5/2)*zeta(x)", 2),
    ("li(x)", 0),
    ("x^2*sin_inv_log(x)", 1),
]


@pytest.mark.parametrize("text,k", EXAMPLES)
def test_growth_exponent(text, k):
    info = growth_exponent(parse(text))
    assert (info.k, info.classification) == (k, "strictly-between")


@pytest.mark.parametrize("text,k", [(t, k) for t, k in EXAMPLES if k >= 1])
def test_derivative_lowers_exponent(text, k):
    assert growth_exponent(differentiate(parse(text))).k == k - 1


def test_exact_power_obstruction():
    info = growth_exponent(parse("x^2 + log(x)"))
    assert (info.k, info.classification) == (2, "exact-power-obstruction")


@pytest.mark.parametrize(
    "a,b,rel,c",
    [("gamma_ln(x+1)", "x*log(x)", "~", 1.0), ("x", "x^2", "<", None), ("x^(5/2)*zeta(x)", "x^(5/2)", "~", 1.0), ("x^3", "x^2", ">", None)],
)
def test_compare_growth(a, b, rel, c):
    cmp = compare_growth(parse(a), parse(b))
    assert cmp.relation == rel
    if c is not None:
        assert abs(cmp.c - c) < 1e-9


@pytest.mark.parametrize("text,sign,lo,hi", [("sin_inv_log(x)", 1, 1, 3), ("log(x) - 10", 1, 22026, 22027), ("-x", -1, 0, 2)])
def test_eventual_sign(text, sign, lo, hi):
    s = eventual_sign(parse(text))
    assert s.sign == sign and lo <= s.threshold <= hi


def test_basic_properties_three_halves():
    assert check_basic_properties(parse("x^(3/2)"), 1).passed


def test_basic_properties_log_is_cofinite():
    rep = check_basic_properties(parse("log(x)"), 0)
    assert rep.cofinite is True
