"""Fixed-point arithmetic on the circle for constants times integers.

A real constant alpha is stored through ``A = floor(alpha * 2^P)``.  Then
``m * alpha mod 1`` is ``(m * A mod 2^P) / 2^P`` up to an error of at most
``(|m| + 1) * 2^-P``.  With P = 64 the products wrap naturally in numpy
``uint64`` arithmetic, which keeps long scans vectorised.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np
from flint import arb, ctx

from .certified import _compile, exact_value
from .expr import Expr, is_constant, parse

__all__ = [
    "named_real",
    "is_rational",
    "fixed_bits",
    "frac_u64",
    "u64_to_unit",
    "dist_to_int_u64",
    "TWO64",
    "FixedConst",
]

TWO64 = 2**64


def named_real(spec) -> Expr:
    """Parse a constant such as ``"sqrt2"``, ``"pi"``, ``"sqrt(5)"`` or ``"1/2"``."""
    if isinstance(spec, Expr):
        e = spec
    elif isinstance(spec, (int, Fraction)):
        e = parse(str(Fraction(spec)))
    else:
        e = parse(str(spec))
    if not is_constant(e):
        raise ValueError(f"{spec!r} is not a constant")
    return e


def is_rational(e: Expr) -> bool:
    return exact_value(e, Fraction(0)) is not None


@lru_cache(maxsize=256)
def fixed_bits(e: Expr, bits: int) -> int:
    """``floor(alpha * 2^bits)`` for a constant alpha, exact."""
    v = exact_value(e, Fraction(0))
    if v is not None:
        return (v.numerator << bits) // v.denominator
    prec = bits + 64
    while True:
        with ctx.workprec(prec):
            x = _compile(e)(arb(0)) * arb(2) ** bits
            f = x.floor().unique_fmpz()
        if f is not None:
            return int(f)
        if prec > 8 * bits + 512:
            raise ArithmeticError(f"cannot isolate floor of {e} * 2^{bits}")
        prec *= 2


class FixedConst:
    """A constant with its integer part and a 64-bit (and 192-bit) fractional part."""

    def __init__(self, spec):
        self.expr = named_real(spec)
        self.rational = is_rational(self.expr)
        full = fixed_bits(self.expr, 64)
        self.int_part = full >> 64
        self.frac64 = full & (TWO64 - 1)
        self.hi_bits = 192
        self.full_hi = fixed_bits(self.expr, self.hi_bits)

    @property
    def value(self) -> float:
        return self.int_part + self.frac64 / TWO64

    def frac_of_multiples(self, mult: np.ndarray) -> np.ndarray:
        """``{m * alpha}`` as uint64 numerators over 2^64, for integer multipliers m."""
        return frac_u64(self.frac64, mult)

    def floor_exact(self, m: int) -> tuple[int, Fraction]:
        """``floor(m * alpha)`` and its fractional part from the 192-bit value.

        The error in the fractional part is at most ``(|m| + 1) * 2^-192``.
        """
        prod = m * self.full_hi
        fl = prod >> self.hi_bits
        return int(fl), Fraction(prod - (fl << self.hi_bits), 1 << self.hi_bits)


def frac_u64(alpha_frac64: int, mult: np.ndarray) -> np.ndarray:
    m = np.asarray(mult).astype(np.int64).view(np.uint64)
    with np.errstate(over="ignore"):
        return m * np.uint64(alpha_frac64)


def u64_to_unit(u: np.ndarray) -> np.ndarray:
    return u.astype(np.float64) / float(TWO64)


def dist_to_int_u64(u: np.ndarray) -> np.ndarray:
    """Distance to the nearest integer of ``u / 2^64`` as floats."""
    with np.errstate(over="ignore"):
        neg = np.uint64(0) - u
    return np.minimum(u, neg).astype(np.float64) / float(TWO64)
