from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

from hardyrec.pet import (
    AlreadyLinearError,
    DegenerateCombinationError,
    ParamPoly,
    family_from_strings,
    family_type,
    leading_coeff_structure,
    parse_poly,
    reduce_to_linear,
    type_less,
    vdc_step,
)


def _lead_set(fam):
    return {str(p.leading_n()) for p in fam.members}


@pytest.mark.parametrize(
    "polys,t",
    [(["n", "2n", "n^2"], (2, 1, 2)), (["n"], (1, 1)), (["n^2", "n^2 + n", "2n^2"], (2, 2, 0)), (["n^3"], (3, 1, 0, 0))],
)
def test_family_type(polys, t):
    assert family_type(family_from_strings(polys)) == t


@given(st.lists(st.integers(0, 5), min_size=2, max_size=5), st.lists(st.integers(0, 5), min_size=2, max_size=5))
def test_type_order_is_lexicographic(a, b):
    assert type_less(a, b) == (tuple(a) < tuple(b))


def test_case2_step_matches_worked_family():
    fam = family_from_strings(["n^2", "2n", "n"])
    new, info = vdc_step(fam)
    assert info.kind == "case2"
    got = {(str(p), str(t)) for p, t in zip(new.members, new.tags)}
    h1 = ParamPoly.h(1, 1)
    n = ParamPoly.n(1)
    want_polys = {str((n + h1) ** 2 - n), str(n**2 - n), str(n)}
    assert {p for p, _ in got} == want_polys
    assert {t for _, t in got} == {"f1", "conj(f1)", "T^(2*h1)conj(f2)*f2"}


def test_linear_family_rejected():
    with pytest.raises(AlreadyLinearError):
        vdc_step(family_from_strings(["n", "2n"]))


def test_case1_cubic_quadratic():
    fam = family_from_strings(["n^2", "n^3"])
    new, info = vdc_step(fam)
    assert info.kind == "case1" and str(info.p_k) == "n^2"
    h = ParamPoly.h(1, 1)
    n = ParamPoly.n(1)
    members = {str(p) for p in new.members}
    for want in (n**3 - n**2, (n + h) ** 3 - n**2, (n + h) ** 2 - n**2):
        assert str(want) in members


def test_golden_trace():
    trace = reduce_to_linear(family_from_strings(["n^2", "2n", "n"]))
    assert trace.types == [(2, 1, 2), (2, 1, 1), (2, 1, 0), (1, 7)]
    h = [ParamPoly.h(j, 3) for j in (1, 2, 3)]
    want = {str(sum(c, ParamPoly.constant(0, 3)) * 2) for r in (1, 2, 3) for c in itertools.combinations(h, r)}
    assert _lead_set(trace.final) == want


def test_linear_trace_is_empty():
    trace = reduce_to_linear(family_from_strings(["n"]))
    assert trace.types == [(1, 1)] and trace.steps == [] and trace.s == 1


def test_cubic_descends():
    trace = reduce_to_linear(family_from_strings(["n^3"]))
    degrees = [t[0] for t in trace.types]
    assert degrees == sorted(degrees, reverse=True) and degrees[0] == 3 and degrees[-1] == 1
    assert all(type_less(b, a) for a, b in zip(trace.types, trace.types[1:]))


@pytest.mark.parametrize("polys", [["n^2"], ["n^2", "n"], ["2n^2", "n^2 + 3n"], ["n^2", "2n", "n"], ["n^2", "n^2 + n"], ["n^3"]])
def test_types_strictly_decrease_and_end_linear(polys):
    trace = reduce_to_linear(family_from_strings(polys))
    assert all(type_less(b, a) for a, b in zip(trace.types, trace.types[1:]))
    assert trace.final.degree == 1
    assert not trace.final.violations()


@given(st.integers(-9, 9), st.integers(-9, 9), st.integers(-9, 9), st.integers(-20, 20), st.integers(-5, 5))
def test_shift_evaluates_consistently(a, b, c, n0, h0):
    p = parse_poly(f"{a}*n^2 + {b}*n + {c}", r=1)
    s = p.shift(ParamPoly.h(1, 1))
    assert s.evaluate(n0, [h0]) == p.evaluate(n0 + h0, [h0])


def test_leading_structure_first_difference():
    ls = leading_coeff_structure(1, [(1, {1}), (-1, set())], 1)
    assert ls.factors and str(ls.P) == "h1" and ls.degree_n == 0


def test_leading_structure_second_difference():
    ls = leading_coeff_structure(2, [(1, (1,)), (-2, (0,)), (1, (-1,))], 1)
    assert ls.factors and str(ls.P) == "2*h1^2"


def test_leading_structure_degenerate():
    with pytest.raises(DegenerateCombinationError):
        leading_coeff_structure(2, [(1, set()), (-1, set())], 1)


def test_parse_poly_rejects_non_polynomials():
    with pytest.raises(ValueError):
        parse_poly("n^(1/2)")
    with pytest.raises(ValueError):
        parse_poly("sin(n)")


@pytest.mark.slow
def test_cubic_with_linear_member_frozen():
    # each Case 2 step at the linear level doubles the quadratic part
    trace = reduce_to_linear(family_from_strings(["n^3", "n"]))
    assert trace.types[0] == (3, 1, 0, 1) and trace.types[-1] == (1, 2047)
    assert len(trace.types) == 14
