"""Acceptance criteria 1-10, one test each.

Every test records a PASS/FAIL line with the measured values; the lines are
printed together at the end of the session (see conftest.py) and by running
this file directly.  Criteria with several parts fail if any part fails, and
the line says which part.
"""

from __future__ import annotations

import itertools
import math
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from hardyrec.certified import floor_eval, range_enumerate
from hardyrec.equidist import (
    TorusFunction,
    build_intervals,
    cesaro_interval_average,
    density_smallfrac,
    direct_sum,
    vdc_bound,
    vdc_input,
)
from hardyrec.expr import parse
from hardyrec.nil import (
    HeisenbergElement,
    TorusPoly,
    heisenberg_inv,
    heisenberg_mul,
    identity,
    make_schedule,
    nil_cesaro_average,
    nil_power,
    nil_power_iterated,
)
from hardyrec.patterns import max_n_in, mine_patterns, recheck_anchor
from hardyrec.pet import ParamPoly, family_from_strings, reduce_to_linear
from hardyrec.recurrence import (
    FiniteSet,
    appendix_average,
    find_progressions,
    naive_progressions,
    parity_obstruction,
    rotation_recurrence_test,
    theoremC_experiment,
)

RESULTS: dict[int, str] = {}


def record(n: int, parts: list[tuple[str, bool, str]]) -> bool:
    ok = all(p for _, p, _ in parts)
    detail = "; ".join(f"{name}: {'ok' if p else 'FAIL'} ({info})" for name, p, info in parts)
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])
    return ok


# ---------------------------------------------------------------------------


def test_criterion_01_pet_golden_trace():
    fam = family_from_strings(["n^2", "2n", "n"])
    t0 = time.perf_counter()
    trace = reduce_to_linear(fam)
    elapsed = time.perf_counter() - t0
    h = [ParamPoly.h(j, 3) for j in (1, 2, 3)]
    want = {str(sum(c, ParamPoly.constant(0, 3)) * 2) for r in (1, 2, 3) for c in itertools.combinations(h, r)}
    got = {str(p.leading_n()) for p in trace.final.members}
    assert record(
        1,
        [
            ("types", trace.types == [(2, 1, 2), (2, 1, 1), (2, 1, 0), (1, 7)], " -> ".join(map(str, trace.types))),
            ("leading set", got == want, ", ".join(sorted(got))),
            ("runtime < 1 s", elapsed < 1.0, f"{elapsed:.3f} s"),
        ],
    )


_MINED: dict = {}


def _mine_all():
    if not _MINED:
        t0 = time.perf_counter()
        for text in ("x^(3/2)", "x*log(x)", "x^(5/2)"):
            for r in (1, 2):
                _MINED[(text, r)] = mine_patterns(parse(text), r, range(10, 201))
        _MINED["mine_time"] = time.perf_counter() - t0
    return _MINED


def test_criterion_02_certificate_soundness():
    mined = _mine_all()
    t0 = time.perf_counter()
    parts = []
    for text in ("x^(3/2)", "x*log(x)", "x^(5/2)"):
        a = parse(text)
        for r in (1, 2):
            rep = mined[(text, r)]
            bad = 0
            for c in rep.certificates:
                vals = set(range_enumerate(a, c.anchor.n_anchor + 1, c.anchor.n_anchor + c.N))
                bad += sum(v not in vals for v in c.progression())
                bad += not recheck_anchor(a, c.anchor)
            parts.append(
                (f"{text} r={r}", bad == 0, f"{len(rep.certificates)} certificates, {len(rep.failures)} m without anchor, {bad} bad")
            )
    total = mined["mine_time"] + time.perf_counter() - t0
    parts.append(("runtime < 300 s", total < 300, f"{total:.1f} s"))
    assert record(2, parts)


def test_criterion_03_pattern_growth_trend():
    rep = _mine_all()[("x^(3/2)", 1)]
    lo, hi = max_n_in(rep.certificates, 10, 76), max_n_in(rep.certificates, 134, 200)
    assert record(3, [("max N over [134,200] > max N over [10,76]", hi > lo, f"{hi} vs {lo}")])


def _vdc_instances(count: int, seed: int):
    rng = np.random.default_rng(seed)
    roots = (2, 3, 5, 6, 7, 10, 11)
    for _ in range(count):
        p, q = int(rng.choice(roots)), int(rng.integers(50, 5000))
        c2 = int(rng.integers(1, 40))
        c3 = int(rng.integers(0, 20))
        f = parse(f"sqrt{p}/{q}*x^2 + x^(3/2)/{c2} + {c3}*x*log(x)/97")
        k = int(rng.integers(2, 10**6))
        length = int(rng.integers(2, 10**4 + 1))
        yield f, k, k + length - 1


def test_criterion_04_van_der_corput_dominance():
    violations, worst = 0, 0.0
    for f, k, l in _vdc_instances(100, seed=2024):
        s = abs(direct_sum(f, k, l))
        b = vdc_bound(vdc_input(f, k, l))
        violations += s > b
        worst = max(worst, s / b)
    assert record(4, [("100 seeded instances", violations == 0, f"{violations} violations, max |sum|/bound = {worst:.3f}")])


def test_criterion_05_equidistribution_decay():
    a = parse("x^(3/2)")
    seq = build_intervals(a, 1, Fraction(1, 10), 1, range(1, 201), skip_empty=True, case="Case2")
    chi = TorusFunction.character(1)
    v200 = abs(cesaro_interval_average(chi, [a], seq, 200))
    v50 = abs(cesaro_interval_average(chi, [a], seq, 50))
    assert record(
        5,
        [
            ("|avg(M=200)| < 0.05", v200 < 0.05, f"{v200:.4f}"),
            ("avg(M=200) < avg(M=50)", v200 < v50, f"{v200:.4f} < {v50:.4f}"),
        ],
    )


def test_criterion_06_density_zero():
    M = 250_000
    d1 = density_smallfrac(["sqrt2"], [1], "inv_log", M)
    d4 = density_smallfrac(["sqrt2"], [1], "inv_log", 4 * M)
    assert record(
        6,
        [("decreases from M to 4M", d4 < d1, f"{d1:.6f} -> {d4:.6f}"), ("final < 0.02", d4 < 0.02, f"{d4:.6f}")],
    )


def test_criterion_07_heisenberg():
    rng = np.random.default_rng(11)
    axioms_ok = True
    for _ in range(10**4):
        m = [int(v) for v in rng.integers(-99, 100, 3)]
        x = [Fraction(int(p), int(q)) for p, q in zip(rng.integers(-999, 1000, 6), rng.integers(1, 1000, 6))]
        g, h, k = (HeisenbergElement(m[i], x[2 * i], x[2 * i + 1]) for i in range(3))
        axioms_ok &= heisenberg_mul(heisenberg_mul(g, h), k) == heisenberg_mul(g, heisenberg_mul(h, k))
        axioms_ok &= heisenberg_mul(g, heisenberg_inv(g)) == identity() == heisenberg_mul(heisenberg_inv(g), g)
        axioms_ok &= heisenberg_mul(identity(), g) == g == heisenberg_mul(g, identity())
    a = HeisenbergElement(2, Fraction(3, 7), Fraction(-5, 11))
    power_ok = nil_power(a, 10**5) == nil_power_iterated(a, 10**5)
    sched = make_schedule(300, 1, seed=0)
    erg = abs(nil_cesaro_average(TorusPoly.character(1), HeisenbergElement(1, parse("sqrt2"), parse("sqrt3")), sched).average)
    half = HeisenbergElement(1, Fraction(1, 2), Fraction(0))
    non_erg = abs(nil_cesaro_average(TorusPoly.character(2), half, sched).average)
    literal = abs(nil_cesaro_average(TorusPoly.character(1), half, sched).average)
    assert record(
        7,
        [
            ("group axioms, 1e4 triples", bool(axioms_ok), "exact"),
            ("power closed form n=1e5", power_ok, "exact"),
            ("ergodic |avg e(t1)| < 0.05", erg < 0.05, f"{erg:.4f}"),
            ("(1,1/2,0) |avg e(2 t1)| >= 0.9", non_erg >= 0.9, f"{non_erg:.4f}; e(t1) gives {literal:.4f}"),
        ],
    )


def test_criterion_08_recurrence_ground_truths():
    parity = [parity_obstruction(l) for l in range(0, 20) if 2 ** (2 * l + 2) <= 10**6]
    parity_ok = all(v.passed for v in parity)
    B = [(Fraction(1, 2), Fraction(3, 4))]
    bad = rotation_recurrence_test("sqrt5", B, ("linear", "sqrt5", Fraction(2)), 20_000, 10**5)
    good = rotation_recurrence_test("sqrt5", B, ("linear", "sqrt5", Fraction(1)), 20_000, 10**5)
    corrected = rotation_recurrence_test("1/sqrt5", [(0, Fraction(1, 10))], ("linear", "sqrt5", Fraction(2)), 20_000, 10**5)
    n_bad = sum(1 for c in bad.counts.values() if c)
    rng = np.random.default_rng(8)
    agree, windows = True, 0
    for N in (1, 2, 17, 100, 1000, 2500, 5000, 10_000):
        for _ in range(3):
            lam = FiniteSet.random(N, float(rng.uniform(0.2, 0.8)), int(rng.integers(2**31)))
            S = sorted({int(v) for v in rng.integers(-min(N, 60), min(N, 60) + 1, 12)})
            ell = int(rng.integers(1, 4))
            agree &= find_progressions(lam, S, ell).counts == naive_progressions(set(lam.elements().tolist()), N, S, ell)
            windows += 1
    assert record(
        8,
        [
            ("(a) parity blocks in 1e6", parity_ok, f"l = 0..{len(parity) - 1}"),
            ("(b) [sqrt5 n + 2] zero witnesses", n_bad == 0, f"{n_bad} of {bad.tested} s have witnesses"),
            ("(b) [sqrt5 n + 1] >= 50%", good.fraction_with_witness >= 0.5, f"{good.fraction_with_witness:.3f}"),
            ("(b') 1/sqrt5, B=[0,1/10) zero witnesses", corrected.fraction_with_witness == 0, f"{corrected.tested} s tested"),
            ("(c) scanner = naive", bool(agree), f"{windows} windows up to 1e4"),
        ],
    )


def test_criterion_09_appendix_decay():
    parts = []
    for t in (Fraction(1, 2), Fraction(1, 3)):
        rep = appendix_average([("sqrt2", 2)], "pi", t, M=400)
        vals = [rep.trend[k] for k in sorted(rep.trend)]
        mono = all(b <= a + 0.02 for a, b in zip(vals, vals[1:]))
        trend = ", ".join(f"M={k}: {rep.trend[k]:.4f}" for k in sorted(rep.trend))
        parts.append((f"t={t} magnitude < 0.05 and non-increasing", rep.magnitude < 0.05 and mono, trend))
    tc = theoremC_experiment("sqrt2", 2, parse("log(x)^2"), "pi/2")
    parts.append(
        ("J-density 0.25 +- 0.03", abs(tc.density_J - 0.25) <= 0.03, f"{tc.density_J:.4f} over {tc.samples} pairs, identity {tc.identity_pass_rate:.3f}")
    )
    assert record(9, parts)


def test_criterion_10_precision_soundness():
    pool = ["x^(3/2)", "x*log(x)", "x^sqrt(2)", "x^(5/2)", "sqrt3*x^(5/2) + x*log(x)", "x^2/log(log(x))", "gamma_ln(x+1)", "li(x)", "log(x)^3", "x^pi"]
    exprs = [parse(t) for t in pool]
    rng = np.random.default_rng(10)
    changes, oracle_mismatch = 0, 0
    mpmath.mp.dps = 120
    for i in range(1000):
        j = int(rng.integers(len(pool)))
        n = int(10 ** rng.uniform(1, 12))
        fr = floor_eval(exprs[j], n)
        hi = floor_eval(exprs[j], n, min_precision=4 * max(fr.precision, 64))
        changes += fr.floor != hi.floor
        if i % 10 == 0:
            oracle_mismatch += fr.floor != _mp_floor(pool[j], n)
    assert record(10, [("1000 floors at 4x precision", changes == 0, f"{changes} changes; mpmath spot checks: {oracle_mismatch} mismatches in 100")])


def _mp_floor(text: str, n: int) -> int:
    x = mpmath.mpf(n)
    f = {
        "x^(3/2)": lambda: x**1.5,
        "x*log(x)": lambda: x * mpmath.log(x),
        "x^sqrt(2)": lambda: x ** mpmath.sqrt(2),
        "x^(5/2)": lambda: x**2.5,
        "sqrt3*x^(5/2) + x*log(x)": lambda: mpmath.sqrt(3) * x**2.5 + x * mpmath.log(x),
        "x^2/log(log(x))": lambda: x**2 / mpmath.log(mpmath.log(x)),
        "gamma_ln(x+1)": lambda: mpmath.loggamma(x + 1),
        "li(x)": lambda: mpmath.li(x) - mpmath.li(2),
        "log(x)^3": lambda: mpmath.log(x) ** 3,
        "x^pi": lambda: x**mpmath.pi,
    }[text]
    return int(mpmath.floor(f()))


if __name__ == "__main__":
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion_")):
        try:
            fn()
        except AssertionError:
            pass
