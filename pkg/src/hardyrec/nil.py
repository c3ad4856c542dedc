"""The Heisenberg-type nilmanifold with law (m,x1,x2)(n,y1,y2) = (m+n, x1+y1, x2+y2+m*y1).

Group elements are exact when their real coordinates are fractions.
Orbits on the quotient are computed through the unipotent affine model
``S(t1, t2) = (t1 + a1, t2 + m t1 + a2)`` on the 2-torus, using closed forms
so that large iterates cost the same as small ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Optional, Sequence

import numpy as np
from flint import arb, ctx

from ._fixed import FixedConst, named_real, u64_to_unit
from .certified import evaluate, to_arb
from .expr import Expr

__all__ = [
    "HeisenbergElement",
    "AffineMap",
    "heisenberg_mul",
    "heisenberg_inv",
    "identity",
    "nil_power",
    "nil_power_iterated",
    "reduce_mod_lattice",
    "to_affine",
    "affine_orbit",
    "affine_iterate",
    "Schedule",
    "make_schedule",
    "NilAverage",
    "nil_cesaro_average",
    "TorusPoly",
]


@dataclass(frozen=True)
class HeisenbergElement:
    m: int
    x1: object = Fraction(0)
    x2: object = Fraction(0)

    def __mul__(self, other: "HeisenbergElement") -> "HeisenbergElement":
        return heisenberg_mul(self, other)

    def __pow__(self, n: int) -> "HeisenbergElement":
        return nil_power(self, n)


def identity() -> HeisenbergElement:
    return HeisenbergElement(0, Fraction(0), Fraction(0))


def heisenberg_mul(g: HeisenbergElement, h: HeisenbergElement) -> HeisenbergElement:
    return HeisenbergElement(g.m + h.m, g.x1 + h.x1, g.x2 + h.x2 + g.m * h.x1)


def heisenberg_inv(g: HeisenbergElement) -> HeisenbergElement:
    return HeisenbergElement(-g.m, -g.x1, -g.x2 + g.m * g.x1)


def nil_power(a: HeisenbergElement, n: int) -> HeisenbergElement:
    """Closed form ``a^n = (n m, n x1, n x2 + m x1 n(n-1)/2)``, valid for every integer n."""
    tri = n * (n - 1) // 2
    return HeisenbergElement(n * a.m, n * a.x1, n * a.x2 + a.m * a.x1 * tri)


def nil_power_iterated(a: HeisenbergElement, n: int) -> HeisenbergElement:
    """Reference implementation by repeated multiplication."""
    g = identity()
    step = a if n >= 0 else heisenberg_inv(a)
    for _ in range(abs(n)):
        g = heisenberg_mul(g, step)
    return g


def reduce_mod_lattice(g: HeisenbergElement) -> HeisenbergElement:
    """Representative of the coset g*Gamma with x1, x2 in [0, 1); m is unchanged.

    Right multiplication by (0, k1, k2) adds (k1, k2 + m k1) to the real coordinates.
    """
    k1 = -math.floor(g.x1)
    x2 = g.x2 + g.m * k1
    k2 = -math.floor(x2)
    return HeisenbergElement(g.m, g.x1 + k1, x2 + k2)


# ---------------------------------------------------------------------------
# affine model


@dataclass(frozen=True)
class AffineMap:
    """``t -> L t + b`` on the l-torus with L unipotent."""

    linear: tuple
    translation: tuple

    def __post_init__(self):
        L = np.array(self.linear, dtype=object)
        l = L.shape[0]
        if L.shape != (l, l) or len(self.translation) != l:
            raise ValueError("shape mismatch")
        N = L - np.identity(l, dtype=object)
        P = np.identity(l, dtype=object)
        for _ in range(l):
            P = P.dot(N)
        if any(v != 0 for v in P.flat):
            raise ValueError("linear part is not unipotent")

    @property
    def dim(self) -> int:
        return len(self.translation)

    def nilpotent_part(self) -> np.ndarray:
        return np.array(self.linear, dtype=object) - np.identity(self.dim, dtype=object)


def to_affine(a: HeisenbergElement) -> AffineMap:
    """The map ``S(t1, t2) = (t1 + x1, t2 + m t1 + x2)`` conjugate to left translation by a."""
    return AffineMap(((1, 0), (a.m, 1)), (a.x1, a.x2))


def _const_arb(c, prec: int) -> arb:
    with ctx.workprec(prec):
        if isinstance(c, Expr):
            return evaluate(c, 0, precision=prec, check_threshold=False).ball
        if isinstance(c, arb):
            return c
        if isinstance(c, float):
            return arb(c)
        return to_arb(Fraction(c))


def affine_orbit(S: AffineMap, x0: Sequence, indices: Sequence[int], prec: int = 256) -> list[tuple]:
    """``S^j(x0)`` reduced mod 1 for each j, as tuples of arb balls.

    Uses ``L^j = sum_r C(j, r) N^r`` and ``sum_{i<j} L^i = sum_r C(j, r+1) N^r``
    with ``N = L - I`` nilpotent.
    """
    l = S.dim
    Npow = [np.identity(l, dtype=object)]
    Nm = S.nilpotent_part()
    for _ in range(l - 1):
        Npow.append(Npow[-1].dot(Nm))
    out = []
    with ctx.workprec(prec):
        b = [_const_arb(c, prec) for c in S.translation]
        x = [_const_arb(c, prec) for c in x0]
        for j in indices:
            if j < 0:
                raise ValueError("indices must be non-negative")
            Lj = sum((comb(j, r) * Npow[r] for r in range(l)), np.zeros((l, l), dtype=object))
            Sj = sum((comb(j, r + 1) * Npow[r] for r in range(l)), np.zeros((l, l), dtype=object))
            pt = []
            for i in range(l):
                acc = arb(0)
                for c in range(l):
                    if Lj[i, c]:
                        acc += int(Lj[i, c]) * x[c]
                    if Sj[i, c]:
                        acc += int(Sj[i, c]) * b[c]
                pt.append(acc - acc.mid().floor())
            out.append(tuple(pt))
    return out


def affine_iterate(S: AffineMap, x0: Sequence, j: int, prec: int = 256) -> tuple:
    """Reference: apply S j times (no reduction until the end)."""
    L = S.linear
    with ctx.workprec(prec):
        b = [_const_arb(c, prec) for c in S.translation]
        x = [_const_arb(c, prec) for c in x0]
        for _ in range(j):
            x = [sum((int(L[i][c]) * x[c] for c in range(len(x))), arb(0)) + b[i] for i in range(len(x))]
        return tuple(v - v.mid().floor() for v in x)


# ---------------------------------------------------------------------------
# Cesaro averages


@dataclass(frozen=True)
class TorusPoly:
    """Trigonometric polynomial ``sum c * e(p t1 + q t2)``; a single term is a character."""

    terms: tuple  # ((coef, (p, q)), ...)
    box: Optional[tuple] = None  # ((a1, b1), (a2, b2)) for an indicator instead

    @staticmethod
    def character(p: int, q: int = 0) -> "TorusPoly":
        return TorusPoly(((1.0, (p, q)),))

    @staticmethod
    def one() -> "TorusPoly":
        return TorusPoly(((1.0, (0, 0)),))

    @staticmethod
    def indicator(box1=(0.0, 1.0), box2=(0.0, 1.0)) -> "TorusPoly":
        return TorusPoly((), (tuple(map(float, box1)), tuple(map(float, box2))))

    def integral(self) -> complex:
        if self.box is not None:
            (a1, b1), (a2, b2) = self.box
            return complex((b1 - a1) * (b2 - a2))
        return complex(sum(c for c, (p, q) in self.terms if p == 0 and q == 0))

    def __call__(self, t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
        if self.box is not None:
            (a1, b1), (a2, b2) = self.box
            return ((t1 >= a1) & (t1 < b1) & (t2 >= a2) & (t2 < b2)).astype(np.complex128)
        out = np.zeros(np.shape(t1), dtype=np.complex128)
        for c, (p, q) in self.terms:
            out += c * np.exp(2j * np.pi * (p * t1 + q * t2))
        return out


@dataclass(frozen=True)
class Schedule:
    """Per-m integer polynomials q_m (constant term first) and lengths N_m."""

    q: tuple
    N: tuple

    def __len__(self) -> int:
        return len(self.N)


def make_schedule(M: int, k: int = 1, seed: int = 0, lengths: Callable[[int], int] = lambda m: m, coef_bound: int = 10**6) -> Schedule:
    """Seeded schedule with random integer q_m of degree at most k-1."""
    rng = np.random.default_rng(seed)
    q = tuple(tuple(int(v) for v in rng.integers(-coef_bound, coef_bound + 1, size=k)) for _ in range(M))
    return Schedule(q, tuple(int(lengths(m)) for m in range(1, M + 1)))


@dataclass(frozen=True)
class NilAverage:
    average: complex
    integral: complex
    gap: float
    per_m: tuple = ()


def _orbit_u64(alpha1: FixedConst, alpha2: FixedConst, m_a: int, e: np.ndarray):
    """Projection of a^e Gamma to the 2-torus as 64-bit fixed-point numerators.

    The 64-bit products carry an error up to ``(|e| + |m_a| e^2 / 2) 2^-64``;
    when that exceeds ``ORBIT_TOL`` the coordinates are formed exactly from
    the 192-bit constants instead and then truncated to 64 bits.
    """
    emax = float(np.max(np.abs(e))) if e.size else 0.0
    if (emax + abs(m_a) * emax * emax / 2 + 2) / 2.0**64 > ORBIT_TOL:
        return _orbit_exact(alpha1, alpha2, m_a, e)
    e_u = e.astype(np.int64).view(np.uint64)
    with np.errstate(over="ignore"):
        tri = np.where(e % 2 == 0, (e // 2) * (e - 1), e * ((e - 1) // 2)).astype(np.int64).view(np.uint64)
        t1 = e_u * np.uint64(alpha1.frac64)
        t2 = e_u * np.uint64(alpha2.frac64) + (tri * np.uint64(m_a % 2**64)) * np.uint64(alpha1.frac64)
    return t1, t2


ORBIT_TOL = 1e-9


def _orbit_exact(alpha1: FixedConst, alpha2: FixedConst, m_a: int, e: np.ndarray):
    bits = alpha1.hi_bits
    mask = (1 << bits) - 1
    shift = bits - 64
    t1 = np.empty(e.shape, dtype=np.uint64)
    t2 = np.empty(e.shape, dtype=np.uint64)
    for i, v in enumerate(e.tolist()):
        tri = v * (v - 1) // 2
        t1[i] = ((v * alpha1.full_hi) & mask) >> shift
        t2[i] = ((v * alpha2.full_hi + m_a * tri * alpha1.full_hi) & mask) >> shift
    return t1, t2


def nil_cesaro_average(F: TorusPoly, a: HeisenbergElement, schedule: Schedule, k: int = 1, M: Optional[int] = None) -> NilAverage:
    """``(1/M) sum_m (1/N_m) sum_{n<=N_m} F(a^(m n^k + q_m(n)) Gamma)`` on the affine model.

    The exponents are exact integers; each coordinate is within ``ORBIT_TOL``
    of the true point (64-bit fixed point when that suffices, 192-bit otherwise).
    """
    M = len(schedule) if M is None else M
    if M > len(schedule):
        raise ValueError("schedule shorter than M")
    tail = schedule.N[2 * M // 3 : M]
    if any(b < a_ for a_, b in zip(tail, tail[1:])):
        raise ValueError("schedule lengths must be non-decreasing in the tail")
    a1 = FixedConst(a.x1 if isinstance(a.x1, Expr) else named_real(a.x1))
    a2 = FixedConst(a.x2 if isinstance(a.x2, Expr) else named_real(a.x2))
    per_m = []
    for m in range(1, M + 1):
        Nm = schedule.N[m - 1]
        if Nm < 1:
            raise ValueError("N_m must be positive")
        qm = schedule.q[m - 1]
        if len(qm) > k:
            raise ValueError("q_m must have degree below k")
        if m * Nm**k + sum(abs(c) * Nm**i for i, c in enumerate(qm)) > 2**62:
            raise OverflowError("exponents too large for int64")
        n = np.arange(1, Nm + 1, dtype=np.int64)
        e = m * n**k
        for i, c in enumerate(qm):
            e = e + c * n**i
        t1, t2 = _orbit_u64(a1, a2, a.m, e)
        per_m.append(complex(np.mean(F(u64_to_unit(t1), u64_to_unit(t2)))))
    avg = complex(sum(per_m) / M)
    integral = F.integral()
    return NilAverage(avg, integral, abs(avg - integral), tuple(per_m))
