"""Growth classification, comparison and sign detection for Hardy expressions.

Each verdict comes from two independent tracks: the leading term of the
multiseries expansion and numeric sampling at ``x = 10^(3*2^j)``.  When both
are available they must agree, otherwise :class:`InconclusiveError` is
raised rather than guessing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from flint import arb, ctx

from .asymptotics import ExpansionUnavailable, Series, expand, key_cmp, monomial_str
from .certified import (
    DomainError,
    PrecisionError,
    evaluate,
    range_enumerate,
    to_arb,
    validity_threshold,
)
from .expr import Expr, X, add, const, differentiate, mul, power, to_string

__all__ = [
    "GrowthInfo",
    "Comparison",
    "SignInfo",
    "PropertyCheck",
    "PropertyReport",
    "InconclusiveError",
    "growth_exponent",
    "compare_growth",
    "eventual_sign",
    "check_basic_properties",
    "SAMPLE_POINTS",
]

SAMPLE_POINTS = tuple(10 ** (3 * 2**j) for j in range(7))
SUPER_POLY_CAP = 64
_CONTRACT = 0.75
_TINY = 1e-10


class InconclusiveError(ArithmeticError):
    """Symbolic and numeric evidence disagree, or neither is decisive."""


@dataclass(frozen=True)
class GrowthInfo:
    """Outcome of :func:`growth_exponent`.

    ``classification`` is one of ``strictly-between``,
    ``exact-power-obstruction``, ``super-polynomial`` or ``bounded``.
    """

    k: int
    classification: str
    sign: int
    threshold: int
    leading: str = ""
    method: str = ""
    coefficient: Optional[float] = None
    samples: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class Comparison:
    """``relation`` is ``<``, ``~`` or ``>``; ``c`` and ``c_err`` only for ``~``."""

    relation: str
    c: Optional[float] = None
    c_err: Optional[float] = None
    method: str = ""
    c_numeric: Optional[float] = None


@dataclass(frozen=True)
class SignInfo:
    sign: int
    threshold: int


@dataclass(frozen=True)
class PropertyCheck:
    part: str
    name: str
    passed: bool
    witnesses: tuple = ()


@dataclass(frozen=True)
class PropertyReport:
    checks: tuple
    cofinite: Optional[bool] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and self.cofinite is not False

    def part(self, label: str) -> list[PropertyCheck]:
        return [c for c in self.checks if c.part == label]


# ---------------------------------------------------------------------------
# sampling helpers


def _log_abs(a: Expr, x, prec: int = 160) -> Optional[tuple[arb, int]]:
    """(log|a(x)|, sign) as an arb at ``prec`` bits, or None if not decidable."""
    try:
        v = evaluate(a, x, prec, check_threshold=False).ball
    except (DomainError, PrecisionError, ZeroDivisionError):
        return None
    if not v.is_finite() or v.contains(0):
        return None
    sign = 1 if v > 0 else -1
    with ctx.workprec(prec):
        return abs(v).log(), sign


def _log_samples(a: Expr, points=SAMPLE_POINTS):
    out = []
    for x in points:
        r = _log_abs(a, x)
        if r is not None:
            out.append((x, r[0], r[1]))
    return out


def _increments(vals: Sequence[float]) -> list[float]:
    return [b - a for a, b in zip(vals, vals[1:])]


def _monotone(vals: Sequence[float], direction: int, need: int = 3) -> bool:
    """Last ``need`` increments all strictly in ``direction``."""
    inc = _increments(vals)
    if len(inc) < need:
        return False
    tail = inc[-need:]
    scale = max(1.0, max(abs(v) for v in vals))
    return all(d * direction > _TINY * scale for d in tail)


def _converges(vals: Sequence[float], target: Optional[float] = None, need: int = 3) -> bool:
    """Distance to the limit shrinks (or is already at noise level) over the last samples."""
    if len(vals) < need + 1:
        return False
    scale = max(1.0, abs(vals[-1]))
    if target is None:
        inc = [abs(d) for d in _increments(vals)][-need:]
        if all(d <= _TINY * scale for d in inc):
            return True
        return all(b <= _CONTRACT * a or b <= _TINY * scale for a, b in zip(inc, inc[1:]))
    dist = [abs(v - target) for v in vals][-(need + 1) :]
    tol = 1e-9 * max(1.0, abs(target))
    return all(b <= a + tol for a, b in zip(dist, dist[1:])) and dist[-1] <= max(dist[0], tol)


def _extrapolate(vals: Sequence[float]) -> tuple[float, float]:
    """Geometric extrapolation of a convergent sequence, with an error bar."""
    inc = _increments(vals)
    last = vals[-1]
    if len(inc) < 2 or inc[-2] == 0:
        return last, abs(inc[-1]) if inc else 0.0
    rho = min(abs(inc[-1] / inc[-2]), 0.95)
    tail = inc[-1] * rho / (1 - rho)
    return last + tail, 2 * abs(tail) + 1e-12 * max(1.0, abs(last))


def _as_float(v) -> float:
    return float(v.mid()) if isinstance(v, arb) else float(v)


def _symbolic(a: Expr) -> Optional[Series]:
    try:
        return expand(a)
    except (ExpansionUnavailable, ZeroDivisionError, OverflowError, ValueError):
        return None


def _x_power(k) -> Expr:
    return power(X, const(Fraction(k)))


# ---------------------------------------------------------------------------
# eventual sign


def eventual_sign(a: Expr) -> SignInfo:
    """Eventual sign of ``a`` and the smallest integer beyond which sampling sees only that sign."""
    s = _symbolic(a)
    sym_sign = None
    if s is not None and not s.is_zero:
        try:
            sym_sign = s.sign()
        except ExpansionUnavailable:
            sym_sign = None
    samples = _log_samples(a)
    num_sign = None
    if len(samples) >= 3 and len({sg for _, _, sg in samples[-3:]}) == 1:
        num_sign = samples[-1][2]
    if sym_sign is not None and num_sign is not None and sym_sign != num_sign:
        raise InconclusiveError(f"expansion sign {sym_sign} disagrees with sampled sign {num_sign}")
    sign = sym_sign if sym_sign is not None else num_sign
    if sign is None:
        raise InconclusiveError(f"cannot determine the eventual sign of {to_string(a)}")

    start = validity_threshold(a)
    points = sorted({p for p in list(range(start, start + 16)) + [2**j for j in range(65)] if p >= start})
    points += [p for p in SAMPLE_POINTS if p > points[-1]]

    def sign_at(x) -> Optional[int]:
        # 0 marks an undecided sign, None a point where a is not finite
        try:
            v = evaluate(a, x, 96, check_threshold=False).ball
        except (DomainError, PrecisionError, ZeroDivisionError):
            return None
        if not v.is_finite():
            return None
        if v.contains(0):
            return 0
        return 1 if v > 0 else -1

    signs = [sign_at(p) for p in points]
    bad = [i for i, sg in enumerate(signs) if sg is not None and sg != sign]
    if not bad:
        return SignInfo(sign, start)
    i = bad[-1]
    if i == len(points) - 1:
        raise InconclusiveError("sign not settled within the sampling cap")
    lo, hi = points[i], points[i + 1]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if sign_at(mid) == sign:
            hi = mid
        else:
            lo = mid
    return SignInfo(sign, hi)


# ---------------------------------------------------------------------------
# growth exponent


def _classify_series(s: Series) -> tuple[str, int, Optional[float], str]:
    if s.inf > 0:
        return "super-polynomial", SUPER_POLY_CAP, None, "+inf-type"
    if not s.terms:
        raise ExpansionUnavailable("leading term not determined")
    key, c = s.terms[0]
    if c <= 0:
        raise ValueError("expression is eventually negative; negate it first")
    p, q, r = key
    leading = f"{float(c):.12g}*{monomial_str(key)}"
    tail = _sign_pair(q, r)
    if p < 0 or (p == 0 and tail <= 0):
        return "bounded", 0, float(c), leading
    p_int = isinstance(p, Fraction) and p.denominator == 1
    if p_int:
        if tail == 0:
            return "exact-power-obstruction", int(p), float(c), leading
        if tail > 0:
            return "strictly-between", int(p), float(c), leading
        return "strictly-between", int(p) - 1, float(c), leading
    return "strictly-between", math.floor(p), float(c), leading


def _sign_pair(q, r) -> int:
    for v in (q, r):
        if v != 0:
            return 1 if v > 0 else -1
    return 0


def _numeric_growth(samples) -> tuple[str, int, Optional[float]]:
    """Numeric-only classification from log|a| samples."""
    xs = [x for x, _, _ in samples]
    logs = [_as_float(l) for _, l, _ in samples]
    lx = [math.log(x) for x in xs]
    slopes = [l / t for l, t in zip(logs, lx)]
    if slopes[-1] > SUPER_POLY_CAP or (_monotone(slopes, 1) and slopes[-1] > SUPER_POLY_CAP / 2):
        return "super-polynomial", SUPER_POLY_CAP, None
    base = max(0, math.floor(slopes[-1] + 1e-9))
    for k in sorted({base, base + 1, max(0, base - 1)}):
        ratio = [math.exp(l - k * t) if l - k * t < 700 else math.inf for l, t in zip(logs, lx)]
        if all(math.isfinite(v) for v in ratio) and _converges(ratio) and not _monotone(
            [l - k * t for l, t in zip(logs, lx)], -1
        ):
            c, _ = _extrapolate(ratio)
            if c > 1e-6:
                return ("bounded" if k == 0 else "exact-power-obstruction"), k, c
    k = base
    lo = [l - k * t for l, t in zip(logs, lx)]
    hi = [l - (k + 1) * t for l, t in zip(logs, lx)]
    if _monotone(lo, 1) and _monotone(hi, -1):
        return "strictly-between", k, None
    if logs[-1] < 0 and _monotone(logs, -1):
        return "bounded", 0, None
    raise InconclusiveError("numeric ratios are not monotone")


def _confirm(classification: str, k: int, coef: Optional[float], samples) -> bool:
    logs = [_as_float(l) for _, l, _ in samples]
    lx = [math.log(x) for x, _, _ in samples]
    if classification == "super-polynomial":
        slopes = [l / t for l, t in zip(logs, lx)]
        return len(slopes) >= 2 and (slopes[-1] > slopes[0] or slopes[-1] > SUPER_POLY_CAP)
    if classification == "strictly-between":
        lo = [l - k * t for l, t in zip(logs, lx)]
        hi = [l - (k + 1) * t for l, t in zip(logs, lx)]
        return _monotone(lo, 1) and _monotone(hi, -1)
    if classification in ("exact-power-obstruction", "bounded"):
        if classification == "bounded" and coef is None:
            return True
        lo = [l - k * t for l, t in zip(logs, lx)]
        if coef is None:
            return _monotone(lo, -1)
        return _converges(lo, math.log(coef))
    return False


def growth_exponent(a: Expr) -> GrowthInfo:
    """Find k with x^k < a < x^(k+1), or detect the obstruction / bounded / super-polynomial cases."""
    sign = eventual_sign(a)
    if sign.sign < 0:
        raise ValueError("expression is eventually negative; negate it first")
    s = _symbolic(a)
    samples = _log_samples(a)
    usable = [t for t in samples if t[2] > 0]
    symbolic = None
    if s is not None:
        try:
            symbolic = _classify_series(s)
        except ExpansionUnavailable:
            symbolic = None
    if symbolic is not None:
        cls, k, coef, leading = symbolic
        if cls == "bounded" and s.terms and key_cmp(s.terms[0][0], (0, 0, 0)) < 0:
            coef = None
        if len(usable) >= 4 and not _confirm(cls, k, coef, usable):
            raise InconclusiveError(
                f"expansion says {cls} with k={k} ({leading}) but sampled ratios do not confirm it"
            )
        if len(usable) < 4 and cls != "super-polynomial":
            raise InconclusiveError("too few finite samples to confirm the expansion")
        return GrowthInfo(k, cls, sign.sign, sign.threshold, leading, "expansion+sampling", coef, tuple(usable))
    if len(usable) < 4:
        raise InconclusiveError("expansion unavailable and too few finite samples")
    cls, k, coef = _numeric_growth(usable)
    return GrowthInfo(k, cls, sign.sign, sign.threshold, "", "sampling", coef, tuple(usable))


# ---------------------------------------------------------------------------
# comparison


def compare_growth(a: Expr, b: Expr) -> Comparison:
    """Compare two eventually positive expressions: ``<``, ``~`` (with c) or ``>``."""
    sa, sb = _symbolic(a), _symbolic(b)
    verdict = None
    if sa is not None and sb is not None:
        verdict = _symbolic_compare(sa, sb)
    pairs = []
    for x in SAMPLE_POINTS:
        la, lb = _log_abs(a, x), _log_abs(b, x)
        if la is None or lb is None:
            continue
        if la[1] < 0 or lb[1] < 0:
            raise ValueError("compare_growth expects eventually positive arguments")
        with ctx.workprec(160):
            pairs.append(_as_float(la[0] - lb[0]))
    numeric = _numeric_compare(pairs) if len(pairs) >= 4 else None

    if verdict is not None:
        rel, c = verdict
        if len(pairs) < 4:
            if sa.inf or sb.inf:
                return Comparison(rel, c, None if c is None else 0.0, "expansion")
            raise InconclusiveError("too few finite samples to confirm the expansion")
        if rel == "~":
            ratios = [math.exp(p) if p < 700 else math.inf for p in pairs]
            if not _converges(ratios, float(c)):
                raise InconclusiveError(f"expansion gives c={float(c):.6g} but sampled ratios do not approach it")
            c_num, _ = _extrapolate(ratios)
            err = 0.0 if isinstance(c, Fraction) else 1e-12 * abs(float(c))
            return Comparison("~", float(c), err, "expansion+sampling", c_num)
        direction = -1 if rel == "<" else 1
        if not _monotone(pairs, direction):
            raise InconclusiveError(f"expansion says {rel} but sampled log-ratios are not monotone")
        return Comparison(rel, method="expansion+sampling")
    if numeric is None:
        raise InconclusiveError("expansion unavailable and sampled ratios are indecisive")
    return numeric


def _symbolic_compare(sa: Series, sb: Series):
    if sa.inf and sb.inf:
        return None
    if sa.inf:
        return (">", None)
    if sb.inf:
        return ("<", None)
    if not sa.terms or not sb.terms:
        # a pure error term is still an upper bound
        if not sb.terms:
            return None
        if key_cmp(sa.order, sb.terms[0][0]) < 0:
            return ("<", None)
        return None
    (ka, ca), (kb, cb) = sa.terms[0], sb.terms[0]
    cmp = key_cmp(ka, kb)
    if cmp < 0:
        return ("<", None)
    if cmp > 0:
        return (">", None)
    c = ca / cb
    return ("~", c)


def _numeric_compare(logs: list[float]) -> Optional[Comparison]:
    ratios = [math.exp(p) if p < 700 else math.inf for p in logs]
    if all(math.isfinite(r) for r in ratios):
        inc = [abs(d) for d in _increments(ratios)][-3:]
        strict = all(b <= 0.5 * a or b <= _TINY for a, b in zip(inc, inc[1:]))
        if strict:
            c, err = _extrapolate(ratios)
            if c > err:
                return Comparison("~", c, err, "sampling", c)
    if _monotone(logs, 1):
        return Comparison(">", method="sampling")
    if _monotone(logs, -1):
        return Comparison("<", method="sampling")
    return None


# ---------------------------------------------------------------------------
# finite checks of the basic growth lemma

DEFAULT_GRID = tuple(10**j for j in range(2, 9))


def _values(e: Expr, grid, prec: int = 192) -> list[arb]:
    return [evaluate(e, x, prec, check_threshold=False).ball for x in grid]


def _strict(vals: Sequence[float], direction: int) -> list:
    bad = []
    for i, (u, v) in enumerate(zip(vals, vals[1:])):
        if not (v - u) * direction > 0:
            bad.append(i + 1)
    return bad


def _ratios(vals: list[arb], grid, exponent: float) -> list[float]:
    with ctx.workprec(192):
        return [_as_float(v / to_arb(x) ** exponent) if exponent >= 0 else _as_float(v * to_arb(x) ** (-exponent))
                for v, x in zip(vals, grid)]


def check_basic_properties(
    a: Expr,
    k: int,
    grid: Sequence[int] = DEFAULT_GRID,
    shifts: Sequence[int] = (1, -1, 2),
    delta: float = 0.1,
    cofinite_window: int = 10_000,
) -> PropertyReport:
    """Grid checks of derivative sandwiches, monotonicity, shift differences and shift ratios."""
    grid = sorted(grid)
    checks: list[PropertyCheck] = []

    def record(part, name, bad_idx, series):
        wit = tuple((grid[i], series[i]) for i in bad_idx)
        checks.append(PropertyCheck(part, name, not bad_idx, wit))

    derivs = {l: differentiate(a, l) for l in range(k + 2)}
    vals = {l: _values(derivs[l], grid) for l in derivs}
    fl = {l: [_as_float(v) for v in vals[l]] for l in vals}

    # (i) sandwiches x^(k-l) < a^(l) < x^(k+1-l) and positivity
    for l in range(k + 1):
        lo = _ratios(vals[l], grid, k - l)
        hi = _ratios(vals[l], grid, k + 1 - l)
        record("i", f"a^({l})/x^{k - l} increasing", _strict(lo, 1), lo)
        record("i", f"a^({l})/x^{k + 1 - l} decreasing", _strict(hi, -1), hi)
    top = fl[k + 1]
    scaled = [_as_float(v * to_arb(x) ** to_arb(Fraction(1) + Fraction(delta).limit_denominator(1000)))
              for v, x in zip(vals[k + 1], grid)]
    record("i", f"x^(1+{delta})*a^({k + 1}) increasing", _strict(scaled, 1), scaled)
    for l in range(k + 2):
        bad = [i for i, v in enumerate(fl[l]) if not v > 0]
        record("i", f"a^({l}) positive", bad, fl[l])

    # (ii) monotonicity
    for l in range(k + 1):
        record("ii", f"a^({l}) increasing", _strict(fl[l], 1), fl[l])
    record("ii", f"a^({k + 1}) decreasing", _strict(top, -1), top)

    # (iii) and (iv) shifted differences and ratios
    base = vals[0]
    cofinite = None
    for c in shifts:
        shifted = _values(a, [x + c for x in grid])
        with ctx.workprec(192):
            diffs = [abs(s - b) for s, b in zip(shifted, base)]
            quot = [_as_float(abs(s / b - 1)) for s, b in zip(shifted, base)]
        if k != 0:
            lo = _ratios(diffs, grid, k - 1)
            hi = _ratios(diffs, grid, k)
            record("iii", f"|a(x+{c})-a(x)|/x^{k - 1} increasing", _strict(lo, 1), lo)
            record("iii", f"|a(x+{c})-a(x)|/x^{k} decreasing", _strict(hi, -1), hi)
        else:
            d = [_as_float(v) for v in diffs]
            record("iii", f"|a(x+{c})-a(x)| decreasing", _strict(d, -1), d)
        record("iv", f"|a(x+{c})/a(x)-1| decreasing", _strict(quot, -1), quot)
    if k == 0:
        n0 = max(grid[0], validity_threshold(a))
        values = range_enumerate(a, n0, n0 + cofinite_window)
        cofinite = values == list(range(values[0], values[-1] + 1))
    return PropertyReport(tuple(checks), cofinite)
