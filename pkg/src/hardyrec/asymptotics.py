"""Truncated multiseries over the scale x^p (log x)^q (log log x)^r.

A :class:`Series` is a finite sum of monomials ``c x^p L^q LL^r`` ordered
by decreasing growth, plus an optional error term ``O(x^P L^Q LL^R)``.
Exponents and coefficients are kept as exact fractions when possible and
fall back to floats for irrational constants.  Functions growing faster
than every power of x are flagged through ``inf``.

Expansions that leave this scale (for instance ``exp(sqrt(log x))``) raise
:class:`ExpansionUnavailable`; callers then rely on numeric sampling only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key, lru_cache
from typing import Optional, Union

from .expr import Add, Const, Expr, Func, Mul, Named, Pow, Var, is_constant

__all__ = ["Series", "ExpansionUnavailable", "expand", "NEG_INF", "key_cmp", "monomial_str"]

Num = Union[Fraction, float]
Key = tuple  # (p, q, r)

NTERMS = 6
NEG_INF: Key = (-math.inf, 0, 0)
ZERO_KEY: Key = (Fraction(0), Fraction(0), Fraction(0))
LOG_KEY: Key = (Fraction(0), Fraction(1), Fraction(0))
LOGLOG_KEY: Key = (Fraction(0), Fraction(0), Fraction(1))
_TOL = 1e-12


class ExpansionUnavailable(ArithmeticError):
    """The expression has no expansion within the supported scale."""


def _eq(a: Num, b: Num) -> bool:
    if a == b:
        return True
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return False
    if math.isinf(a) or math.isinf(b):
        return False
    return abs(a - b) <= _TOL * max(1.0, abs(a), abs(b))


def _is_zero(c: Num) -> bool:
    return c == 0 if isinstance(c, Fraction) else abs(c) < 1e-13


def key_cmp(k1: Key, k2: Key) -> int:
    for a, b in zip(k1, k2):
        if not _eq(a, b):
            return 1 if a > b else -1
    return 0


def _kadd(k1: Key, k2: Key) -> Key:
    if k1[0] == -math.inf or k2[0] == -math.inf:
        return NEG_INF
    return tuple(a + b for a, b in zip(k1, k2))


def _kscale(k: Key, alpha: Num) -> Key:
    if k[0] == -math.inf:
        if alpha > 0:
            return NEG_INF
        raise ExpansionUnavailable("negative power of a rapidly decaying term")
    return tuple(a * alpha if a != 0 else a for a in k)


def _kneg(k: Key) -> Key:
    return tuple(-a if a != 0 else a for a in k)


def _kmax(k1: Optional[Key], k2: Optional[Key]) -> Optional[Key]:
    if k1 is None:
        return k2
    if k2 is None:
        return k1
    return k1 if key_cmp(k1, k2) >= 0 else k2


def _cpow(c: Num, alpha: Num) -> Num:
    if isinstance(alpha, Fraction) and alpha.denominator == 1:
        return c ** int(alpha)
    if isinstance(c, Fraction) and isinstance(alpha, Fraction):
        from .expr import _exact_root

        root = _exact_root(c, alpha.denominator)
        if root is not None:
            return root**alpha.numerator
    if c < 0:
        raise ExpansionUnavailable("non-integral power of a negative coefficient")
    return float(c) ** float(alpha)


def _binom(alpha: Num, j: int) -> Num:
    out: Num = Fraction(1)
    for i in range(j):
        out = out * (alpha - i) / (i + 1)
    return out


def _num(x: Num) -> Num:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class Series:
    """``sum c_i x^p_i L^q_i LL^r_i + O(order)``; ``inf`` marks super-polynomial growth."""

    terms: tuple = ()
    order: Optional[Key] = None
    inf: int = 0

    # -- construction -------------------------------------------------------

    @staticmethod
    def const(c: Num) -> "Series":
        c = _num(c)
        if _is_zero(c):
            return Series()
        return Series(((ZERO_KEY, c),))

    @staticmethod
    def monomial(key: Key, c: Num = Fraction(1)) -> "Series":
        return Series(((key, _num(c)),))

    @staticmethod
    def error(order: Key) -> "Series":
        return Series((), order)

    @staticmethod
    def normalized(terms, order: Optional[Key]) -> "Series":
        merged: list[list] = []
        for key, coef in sorted(terms, key=cmp_to_key(lambda s, t: -key_cmp(s[0], t[0]))):
            if merged and key_cmp(merged[-1][0], key) == 0:
                merged[-1][1] = merged[-1][1] + coef
            else:
                merged.append([key, coef])
        kept = []
        for key, coef in merged:
            if _is_zero(coef):
                continue
            if order is not None and key_cmp(key, order) <= 0:
                continue
            kept.append((key, coef))
        if len(kept) > NTERMS:
            order = _kmax(order, kept[NTERMS][0])
            kept = kept[:NTERMS]
        return Series(tuple(kept), order)

    # -- queries ------------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms and self.order is None and not self.inf

    @property
    def lead(self) -> Optional[tuple[Key, Num]]:
        return self.terms[0] if self.terms else None

    @property
    def lead_key(self) -> Optional[Key]:
        if self.terms:
            return self.terms[0][0]
        return self.order

    def sign(self) -> int:
        if self.inf:
            return self.inf
        if not self.terms:
            raise ExpansionUnavailable("sign of a pure error term is unknown")
        return 1 if self.terms[0][1] > 0 else -1

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "Series") -> "Series":
        if self.inf or other.inf:
            if self.inf and other.inf and self.inf != other.inf:
                raise ExpansionUnavailable("difference of two super-polynomial terms")
            return Series(inf=self.inf or other.inf)
        return Series.normalized(self.terms + other.terms, _kmax(self.order, other.order))

    def __neg__(self) -> "Series":
        return self.scale(Fraction(-1))

    def __sub__(self, other: "Series") -> "Series":
        return self + (-other)

    def scale(self, c: Num) -> "Series":
        c = _num(c)
        if _is_zero(c):
            return Series()
        if self.inf:
            return Series(inf=self.inf * (1 if c > 0 else -1))
        return Series(tuple((k, v * c) for k, v in self.terms), self.order)

    def __mul__(self, other: "Series") -> "Series":
        if self.is_zero or other.is_zero:
            return Series()
        if self.inf or other.inf:
            return Series(inf=self.sign() * other.sign())
        terms = [(_kadd(k1, k2), c1 * c2) for k1, c1 in self.terms for k2, c2 in other.terms]
        order = None
        if other.order is not None:
            order = _kmax(order, _kadd(self.lead_key, other.order))
        if self.order is not None:
            order = _kmax(order, _kadd(other.lead_key, self.order))
        return Series.normalized(terms, order)

    def _split_lead(self) -> tuple[Num, Key, "Series"]:
        """Return ``(c, K, eps)`` with ``self = c x^K (1 + eps)`` and eps -> 0."""
        if not self.terms:
            raise ExpansionUnavailable("no leading term")
        key, c = self.terms[0]
        shift = _kneg(key)
        rest = tuple((_kadd(k, shift), v / c) for k, v in self.terms[1:])
        order = None if self.order is None else _kadd(self.order, shift)
        return c, key, Series(rest, order)

    def __pow__(self, alpha) -> "Series":
        alpha = _num(alpha)
        if alpha == 0:
            return Series.const(Fraction(1))
        if self.inf:
            if alpha > 0 and self.inf > 0:
                return Series(inf=1)
            if alpha < 0 and self.inf > 0:
                return Series.error(NEG_INF)
            raise ExpansionUnavailable("power of a negative super-polynomial term")
        if self.is_zero:
            if alpha > 0:
                return Series()
            raise ZeroDivisionError("negative power of zero")
        if not self.terms:
            if alpha > 0:
                return Series.error(_kscale(self.order, alpha))
            raise ExpansionUnavailable("negative power of a pure error term")
        c, key, eps = self._split_lead()
        head = Series.monomial(_kscale(key, alpha), _cpow(c, alpha))
        return head * _power_series(eps, [_binom(alpha, j) for j in range(NTERMS + 1)], terminating=_is_nat(alpha))

    def log(self) -> "Series":
        if self.inf:
            raise ExpansionUnavailable("log of a super-polynomial term")
        if not self.terms:
            raise ExpansionUnavailable("log of a pure error term")
        c, key, eps = self._split_lead()
        if c <= 0:
            raise ExpansionUnavailable("log of an eventually non-positive function")
        p, q, r = key
        if r != 0:
            raise ExpansionUnavailable("log log log x is outside the scale")
        out = Series()
        if p != 0:
            out = out + Series.monomial(LOG_KEY, p)
        if q != 0:
            out = out + Series.monomial(LOGLOG_KEY, q)
        if not (isinstance(c, Fraction) and c == 1):
            out = out + Series.const(math.log(c) if not isinstance(c, Fraction) else _log_fraction(c))
        coeffs = [Fraction(0)] + [Fraction((-1) ** (j + 1), j) for j in range(1, NTERMS + 1)]
        return out + _power_series(eps, coeffs)

    def exp(self) -> "Series":
        if self.inf:
            raise ExpansionUnavailable("exp of a super-polynomial term")
        if self.order is not None and key_cmp(self.order, ZERO_KEY) >= 0:
            raise ExpansionUnavailable("exponent known only up to a non-decaying error")
        loglin: dict = {}
        other: list = []
        const: Num = Fraction(0)
        decay: list = []
        for key, c in self.terms:
            cmp0 = key_cmp(key, ZERO_KEY)
            if cmp0 > 0:
                if key_cmp(key, LOG_KEY) == 0:
                    loglin["q"] = c
                elif key_cmp(key, LOGLOG_KEY) == 0:
                    loglin["r"] = c
                else:
                    other.append((key, c))
            elif cmp0 == 0:
                const = const + c
            else:
                decay.append((key, c))
        if other:
            gkey, gc = other[0]
            above_log = key_cmp(gkey, LOG_KEY) > 0
            if above_log and gc > 0:
                return Series(inf=1)
            if above_log and gc < 0:
                return Series.error(NEG_INF)
            if gc > 0:
                raise ExpansionUnavailable("exp of a positive sub-logarithmic term")
        # exp(c1 log x + c2 log log x) = x^c1 (log x)^c2
        mono_key = (_num(loglin.get("q", Fraction(0))), _num(loglin.get("r", Fraction(0))), Fraction(0))
        factor = Fraction(1) if const == 0 else math.exp(const)
        if other:
            # exp(-c (log x)^s) with 0 < s < 1 decays slower than any power of x
            # but faster than any power of log x.
            return Series.error(_kadd(mono_key, (Fraction(0), -math.inf, Fraction(0))))
        d = Series(tuple(decay), self.order)
        coeffs = [Fraction(1, math.factorial(j)) for j in range(NTERMS + 1)]
        return Series.monomial(mono_key, factor) * _power_series(d, coeffs)

    # -- display ------------------------------------------------------------

    def __str__(self) -> str:
        if self.inf:
            return "+inf-type" if self.inf > 0 else "-inf-type"
        parts = [f"{_fmt_num(c)}*{monomial_str(k)}" for k, c in self.terms]
        if self.order is not None:
            parts.append(f"O({monomial_str(self.order)})")
        return " + ".join(parts) if parts else "0"


def _is_nat(alpha: Num) -> bool:
    return isinstance(alpha, Fraction) and alpha.denominator == 1 and alpha >= 0


def _log_fraction(c: Fraction) -> float:
    return math.log(c.numerator) - math.log(c.denominator)


def _fmt_num(c: Num) -> str:
    if isinstance(c, Fraction):
        return str(c)
    return f"{c:.12g}"


def monomial_str(k: Key) -> str:
    if k[0] == -math.inf:
        return "x^-inf"
    names = ("x", "log(x)", "log(log(x))")
    parts = []
    for name, e in zip(names, k):
        if e == 0:
            continue
        if isinstance(e, float) and math.isinf(e):
            parts.append(f"{name}^{'-' if e < 0 else ''}inf")
        elif e == 1:
            parts.append(name)
        else:
            parts.append(f"{name}^({_fmt_num(e)})")
    return "*".join(parts) if parts else "1"


def _power_series(eps: Series, coeffs: list, terminating: bool = False) -> Series:
    """Evaluate ``sum coeffs[j] eps^j`` for an infinitesimal eps, with remainder."""
    if eps.is_zero:
        return Series.const(coeffs[0])
    if eps.lead_key is not None and key_cmp(eps.lead_key, ZERO_KEY) >= 0:
        raise ExpansionUnavailable("series argument does not tend to zero")
    out = Series.const(coeffs[0])
    power = Series.const(Fraction(1))
    n = len(coeffs) - 1
    for j in range(1, n + 1):
        power = power * eps
        if not _is_zero(coeffs[j]):
            out = out + power.scale(coeffs[j])
    if not (terminating and _is_zero(coeffs[-1])):
        remainder = _kscale(eps.lead_key, n + 1)
        out = out + Series.error(remainder)
    return out


# ---------------------------------------------------------------------------
# expansion of expression trees


def _const_num(e: Expr) -> Num:
    if isinstance(e, Const):
        return e.value
    from .certified import evaluate, exact_value

    v = exact_value(e, Fraction(1))
    if v is not None:
        return v
    return float(evaluate(e, 1, 96, check_threshold=False).ball.mid())


def _tends_to_infinity(u: Series) -> bool:
    return u.inf > 0 or (u.terms and key_cmp(u.terms[0][0], ZERO_KEY) > 0 and u.terms[0][1] > 0)


@lru_cache(maxsize=2048)
def expand(e: Expr) -> Series:
    """Multiseries of ``e`` as x -> infinity."""
    if is_constant(e):
        return Series.const(_const_num(e))
    if isinstance(e, Var):
        return Series.monomial((Fraction(1), Fraction(0), Fraction(0)))
    if isinstance(e, Add):
        out = Series()
        for t in e.terms:
            out = out + expand(t)
        return out
    if isinstance(e, Mul):
        out = Series.const(Fraction(1))
        for f in e.factors:
            out = out * expand(f)
        return out
    if isinstance(e, Pow):
        return expand(e.base) ** _const_num(e.exponent)
    if isinstance(e, Func):
        u = expand(e.arg)
        name = e.name
        if name == "exp":
            return u.exp()
        if name == "log":
            return u.log()
        if name == "zeta":
            if not (u.inf > 0 or (u.terms and u.terms[0][0][0] > 0 and u.terms[0][1] > 0)):
                raise ExpansionUnavailable("zeta argument must grow polynomially")
            if e.order == 0:
                return Series(((ZERO_KEY, Fraction(1)),), NEG_INF)
            return Series.error(NEG_INF)
        if not _tends_to_infinity(u) or u.inf:
            raise ExpansionUnavailable(f"{name} needs an argument tending to infinity polynomially")
        if name == "gamma_ln":
            return _gamma_ln(u, e.order)
        if name == "li":
            L = u.log()
            inv = L ** -1
            tail = Series.const(Fraction(1)) + inv + (inv**2).scale(2) + (inv**3).scale(6) + Series.error((inv**4).lead_key)
            return u * inv * tail
        if name in ("sin_inv_log", "cos_inv_log"):
            v = u.log() ** -1
            if name == "sin_inv_log":
                return v - (v**3).scale(Fraction(1, 6)) + (v**5).scale(Fraction(1, 120)) + Series.error((v**7).lead_key)
            return (
                Series.const(Fraction(1))
                - (v**2).scale(Fraction(1, 2))
                + (v**4).scale(Fraction(1, 24))
                + Series.error((v**6).lead_key)
            )
    raise ExpansionUnavailable(f"no expansion for {e!r}")


def _gamma_ln(u: Series, order: int) -> Series:
    inv = u**-1
    if order == 0:
        L = u.log()
        return (
            u * L
            - u
            - L.scale(Fraction(1, 2))
            + Series.const(0.5 * math.log(2 * math.pi))
            + inv.scale(Fraction(1, 12))
            - (inv**3).scale(Fraction(1, 360))
            + Series.error((inv**5).lead_key)
        )
    if order == 1:
        return (
            u.log()
            - inv.scale(Fraction(1, 2))
            - (inv**2).scale(Fraction(1, 12))
            + Series.error((inv**4).lead_key)
        )
    m = order - 1
    sign = (-1) ** (m + 1)
    return (
        (inv**m).scale(sign * math.factorial(m - 1))
        + (inv ** (m + 1)).scale(Fraction(sign * math.factorial(m), 2))
        + (inv ** (m + 2)).scale(Fraction(sign * math.factorial(m + 1), 12))
        + Series.error((inv ** (m + 4)).lead_key)
    )
