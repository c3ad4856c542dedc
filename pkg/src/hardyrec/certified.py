"""Certified evaluation of Hardy expressions on top of arb ball arithmetic.

Every value produced here is an interval guaranteed to contain the true
value.  Floors are only reported when the interval sits strictly inside
one unit cell; otherwise precision is doubled up to a hard cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable

import gmpy2
from flint import arb, arb_series, ctx, fmpq

from .expr import _exact_root, _iroot, Add, Const, Expr, Func, Mul, Named, Pow, Var, differentiate, is_constant

__all__ = [
    "CertifiedReal",
    "FloorResult",
    "DomainError",
    "PrecisionError",
    "FloorAmbiguityError",
    "PRECISION_CAP",
    "evaluate",
    "floor_eval",
    "deriv_eval",
    "range_enumerate",
    "validity_threshold",
    "exact_value",
    "to_arb",
]

PRECISION_CAP = 4096


class DomainError(ValueError):
    """The expression is undefined (or not finite) at the requested point."""


class PrecisionError(ArithmeticError):
    """The required accuracy was not reached below the precision cap."""


class FloorAmbiguityError(PrecisionError):
    """The value cannot be separated from an integer below the precision cap."""

    def __init__(self, n, precision: int):
        self.n = n
        self.precision = precision
        super().__init__(f"floor of a({n}) is ambiguous at {precision} bits")


def _arb_to_fraction(x: arb) -> Fraction:
    man, exp = x.man_exp()
    man, exp = int(man), int(exp)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)


@dataclass(frozen=True)
class CertifiedReal:
    """A real number known to lie in ``[midpoint - radius, midpoint + radius]``."""

    ball: arb
    precision: int

    @property
    def midpoint(self) -> Fraction:
        return _arb_to_fraction(self.ball.mid())

    @property
    def radius(self) -> Fraction:
        return _arb_to_fraction(self.ball.rad())

    @property
    def lower(self) -> Fraction:
        return self.midpoint - self.radius

    @property
    def upper(self) -> Fraction:
        return self.midpoint + self.radius

    def contains(self, value) -> bool:
        return self.lower <= Fraction(value) <= self.upper

    def __float__(self) -> float:
        return float(self.ball.mid())

    def __repr__(self) -> str:
        return f"CertifiedReal({self.ball.str(20, radius=True)})"


@dataclass(frozen=True)
class FloorResult:
    """``[a(n)]`` together with a certified fractional part."""

    n: int
    floor: int
    frac: CertifiedReal
    precision: int
    exact: bool = False


# ---------------------------------------------------------------------------
# compilation to arb closures

ArbFn = Callable[[arb], arb]


def to_arb(value) -> arb:
    if isinstance(value, arb):
        return value
    if isinstance(value, int):
        return arb(value)
    value = Fraction(value)
    if value.denominator == 1:
        return arb(value.numerator)
    return arb(fmpq(value.numerator, value.denominator))


def _zeta_derivative_large(u: arb, j: int) -> arb:
    """``zeta^(j)(u) = (-1)^j sum_n log(n)^j n^-u`` from the n = 2, 3 terms.

    For ``u >= 64 + 2j`` the tail over n >= 4 is at most twice its first term
    (compare with the integral), so it enters as a ball of that radius.
    """
    def term(n: int) -> arb:
        return arb(n).log() ** j * arb(n) ** (-u)

    tail = 2 * term(4)
    val = term(2) + term(3) + arb(0, tail.upper())
    return val if j % 2 == 0 else -val


def _series_coefficient(kind: str, u: arb, order: int) -> arb:
    # the arb zeta series returns nan for arguments beyond about 2^44
    if kind == "zeta" and order and u.lower() >= 64 + 2 * order:
        return _zeta_derivative_large(u, order)
    s = arb_series([u, 1], prec=order + 1)
    s = s.lgamma() if kind == "gamma_ln" else s.zeta()
    return s.coeffs()[order] * arb.fac_ui(order) if order else s.coeffs()[0]


@lru_cache(maxsize=1024)
def _compile(e: Expr) -> ArbFn:
    if isinstance(e, Const):
        v = e.value
        return lambda x: to_arb(v)
    if isinstance(e, Named):
        if e.name == "pi":
            return lambda x: arb.pi()
        if e.name == "e":
            return lambda x: arb.const_e()
        raise ValueError(e.name)
    if isinstance(e, Var):
        return lambda x: x
    if isinstance(e, Add):
        parts = [_compile(t) for t in e.terms]

        def f_add(x):
            acc = parts[0](x)
            for p in parts[1:]:
                acc = acc + p(x)
            return acc

        return f_add
    if isinstance(e, Mul):
        parts = [_compile(t) for t in e.factors]

        def f_mul(x):
            acc = parts[0](x)
            for p in parts[1:]:
                acc = acc * p(x)
            return acc

        return f_mul
    if isinstance(e, Pow):
        base = _compile(e.base)
        ex = e.exponent
        if isinstance(ex, Const) and ex.value.denominator == 1:
            k = int(ex.value)
            if k >= 0:
                return lambda x: base(x) ** k
            return lambda x: 1 / (base(x) ** (-k))
        if isinstance(ex, Const) and ex.value.denominator % 2 == 1:
            num, den = ex.value.numerator, ex.value.denominator

            def f_root(x):
                b = base(x)
                if b < 0:
                    r = -((-b).root(den))
                else:
                    r = b.root(den)
                return r**num if num >= 0 else 1 / r ** (-num)

            return f_root
        expo = _compile(ex)
        return lambda x: base(x) ** expo(x)
    if isinstance(e, Func):
        arg = _compile(e.arg)
        name, order = e.name, e.order
        if name == "exp":
            return lambda x: arg(x).exp()
        if name == "log":
            return lambda x: arg(x).log()
        if name == "gamma_ln":
            if order == 0:
                return lambda x: arg(x).lgamma()
            return lambda x: _series_coefficient("gamma_ln", arg(x), order)
        if name == "zeta":
            if order == 0:
                return lambda x: arg(x).zeta()
            return lambda x: _series_coefficient("zeta", arg(x), order)
        if name == "li":
            # offset logarithmic integral, integral from 2 to u of dt/log t
            return lambda x: arg(x).li(offset=True)
        if name == "sin_inv_log":
            return lambda x: (1 / arg(x).log()).sin()
        if name == "cos_inv_log":
            return lambda x: (1 / arg(x).log()).cos()
    raise TypeError(f"cannot evaluate {e!r}")


def _raw(e: Expr, x, prec: int) -> arb:
    with ctx.workprec(prec):
        return _compile(e)(to_arb(x))


def _finite(v: arb) -> bool:
    return v.is_finite() and not v.is_nan()


# ---------------------------------------------------------------------------
# exact evaluation for provably rational values


def _perfect_power(v: Fraction) -> tuple[Fraction, int] | None:
    """Write a positive rational v != 1 as b^k with b > 1 and k maximal."""
    if v <= 0 or v == 1:
        return None
    sign = 1
    if v < 1:
        v, sign = 1 / v, -1
    num, den = v.numerator, v.denominator
    if not gmpy2.is_power(num) and not (den > 1 and gmpy2.is_power(den)):
        return Fraction(v), sign
    for k in range(max(num.bit_length(), den.bit_length()), 1, -1):
        rn = _iroot(num, k)
        if rn is None:
            continue
        rd = _iroot(den, k)
        if rd is None:
            continue
        return Fraction(rn, rd), sign * k
    return Fraction(v), sign


def exact_value(e: Expr, x: Fraction) -> Fraction | None:
    """Return the exact rational value of ``e`` at ``x`` when it is provably rational."""
    x = Fraction(x)
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Named):
        return None
    if isinstance(e, Add):
        total = Fraction(0)
        for t in e.terms:
            v = exact_value(t, x)
            if v is None:
                return None
            total += v
        return total
    if isinstance(e, Mul):
        coef = Fraction(1)
        logs: list[tuple[Fraction, int]] = []
        for f in e.factors:
            log_arg, power = _as_log_power(f)
            if log_arg is not None:
                u = exact_value(log_arg, x)
                if u is None:
                    return None
                if u == 1:
                    if power > 0:
                        return Fraction(0)
                    return None
                logs.append((u, power))
                continue
            v = exact_value(f, x)
            if v is None:
                return None
            if v == 0:
                return Fraction(0)
            coef *= v
        if not logs:
            return coef
        if sum(p for _, p in logs) != 0:
            return None
        bases = [_perfect_power(u) for u, _ in logs]
        if any(b is None for b in bases) or len({b[0] for b in bases}) != 1:
            return None
        for (b, k), (_, p) in zip(bases, logs):
            coef *= Fraction(k) ** p
        return coef
    if isinstance(e, Pow):
        if not isinstance(e.exponent, Const):
            base = exact_value(e.base, x)
            return Fraction(1) if base == 1 else None
        base = exact_value(e.base, x)
        if base is None:
            return None
        p = e.exponent.value
        if base == 0:
            return Fraction(0) if p > 0 else None
        root = _exact_root(base, p.denominator)
        if root is None:
            return None
        return root**p.numerator
    if isinstance(e, Func):
        if e.name == "exp":
            v = exact_value(e.arg, x)
            return Fraction(1) if v == 0 else None
        if e.name == "log":
            v = exact_value(e.arg, x)
            return Fraction(0) if v == 1 else None
        return None
    return None


def _as_log_power(f: Expr) -> tuple[Expr | None, int]:
    if isinstance(f, Func) and f.name == "log":
        return f.arg, 1
    if (
        isinstance(f, Pow)
        and isinstance(f.base, Func)
        and f.base.name == "log"
        and isinstance(f.exponent, Const)
        and f.exponent.value.denominator == 1
    ):
        return f.base.arg, int(f.exponent.value)
    return None, 0


# ---------------------------------------------------------------------------
# validity threshold


@lru_cache(maxsize=1024)
def validity_threshold(e: Expr) -> int:
    """Smallest integer u >= 1 such that ``e`` evaluates to a finite value at every sampled x >= u.

    Samples 1..16 and powers of two up to 2^64, then bisects between the
    last failing and the first subsequent passing sample.
    """
    if is_constant(e):
        return 1
    samples = list(range(1, 17)) + [2**j for j in range(5, 65)]

    def ok(x) -> bool:
        try:
            return _finite(_raw(e, x, 96))
        except (ZeroDivisionError, ValueError):
            return False

    last_bad = 0
    for s in samples:
        if not ok(s):
            last_bad = s
    if last_bad == samples[-1]:
        raise DomainError(f"{e} is not finite on the sampled half line")
    if last_bad <= 16:
        return last_bad + 1
    lo = last_bad
    hi = next(s for s in samples if s > last_bad)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# public evaluators


def evaluate(a: Expr, x, precision: int = 64, *, check_threshold: bool = True) -> CertifiedReal:
    """Certified value of ``a(x)`` with radius at most 2^(-precision/2) * max(1, |mid|)."""
    x = Fraction(x)
    if check_threshold and not is_constant(a) and x < validity_threshold(a):
        raise DomainError(f"x = {x} is below the validity threshold {validity_threshold(a)} of {a}")
    prec = precision + 32
    while True:
        v = _raw(a, x, prec)
        if not _finite(v):
            if v.is_nan() and prec < PRECISION_CAP:
                # nan can stem from catastrophic radius growth; retry wider
                prec = min(2 * prec, PRECISION_CAP)
                continue
            raise DomainError(f"{a} is not finite at x = {x}")
        mag = max(abs(v.mid()), arb(1))
        bound = mag * arb(2) ** (-(precision // 2))
        if v.rad() <= bound:
            return CertifiedReal(v, prec)
        if prec >= PRECISION_CAP:
            raise PrecisionError(f"radius target not met for {a} at x = {x} within {PRECISION_CAP} bits")
        prec = min(2 * prec, PRECISION_CAP)


def _floor_from_ball(v: arb, prec: int) -> int | None:
    # floor rounds to the working precision, so it must run at the ball's precision
    with ctx.workprec(prec):
        f = v.floor().unique_fmpz()
    return None if f is None else int(f)


def floor_eval(a: Expr, n, *, min_precision: int = 64, check_threshold: bool = True) -> FloorResult:
    """Exact ``[a(n)]`` with a certified fractional part.

    Provably rational values are handled exactly; otherwise precision is
    doubled until the enclosing ball lies inside one unit cell.
    """
    n_val = Fraction(n)
    if check_threshold and not is_constant(a) and n_val < validity_threshold(a):
        raise DomainError(f"n = {n} is below the validity threshold {validity_threshold(a)} of {a}")
    exact = exact_value(a, n_val)
    if exact is not None:
        fl = math.floor(exact)
        frac = exact - fl
        return FloorResult(int(n), fl, CertifiedReal(to_arb(frac), 0), 0, exact=True)
    prec = max(min_precision, 64)
    while True:
        v = _raw(a, n_val, prec)
        if _finite(v):
            fl = _floor_from_ball(v, prec)
            if fl is not None:
                with ctx.workprec(prec):
                    frac = v - fl
                return FloorResult(int(n), fl, CertifiedReal(frac, prec), prec)
        elif not v.is_nan():
            raise DomainError(f"{a} is not finite at n = {n}")
        if prec >= PRECISION_CAP:
            if not _finite(v):
                raise DomainError(f"{a} is not finite at n = {n}")
            raise FloorAmbiguityError(n, prec)
        prec = min(2 * prec, PRECISION_CAP)


def deriv_eval(a: Expr, i: int, n, precision: int = 64) -> CertifiedReal:
    """Certified value of the i-th derivative of ``a`` at ``n``."""
    if i < 0:
        raise ValueError("derivative order must be non-negative")
    return evaluate(differentiate(a, i), n, precision)


def floors(a: Expr, ns: Iterable[int]) -> list[int]:
    """``[a(n)]`` for each n, aborting on the first ambiguous value."""
    return [floor_eval(a, n, check_threshold=False).floor for n in ns]


def range_enumerate(a: Expr, n_lo: int, n_hi: int) -> list[int]:
    """Sorted distinct values of ``[a(n)]`` for n_lo <= n <= n_hi."""
    if n_lo > n_hi:
        raise ValueError("n_lo must not exceed n_hi")
    if not is_constant(a) and n_lo < validity_threshold(a):
        raise DomainError(f"n_lo = {n_lo} is below the validity threshold {validity_threshold(a)}")
    return sorted(set(floors(a, range(n_lo, n_hi + 1))))
