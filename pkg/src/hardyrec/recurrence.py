"""Finite recurrence experiments on integer windows [0, N).

Progression search, the parity obstruction for ``[log2 n]``, rotation sets
``{n : {n alpha} in B}``, and the double averages behind the appendix lemma
and the decomposition ``a = c p + b`` with slowly growing b.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from ._fixed import TWO64, FixedConst, named_real, u64_to_unit
from .certified import evaluate, floor_eval
from .equidist import first_at_least
from .expr import X, Expr, add, const, mul, parse, power
from .growth import growth_exponent

__all__ = [
    "FiniteSet",
    "RecurrenceReport",
    "find_progressions",
    "naive_progressions",
    "ParityVerdict",
    "parity_obstruction",
    "rotation_set",
    "sequence_values",
    "RotationReport",
    "rotation_recurrence_test",
    "AppendixReport",
    "appendix_average",
    "TheoremCReport",
    "theoremC_experiment",
]


# ---------------------------------------------------------------------------
# finite sets and progressions


@dataclass(frozen=True)
class FiniteSet:
    """Membership bitmap over the window [0, N)."""

    bits: np.ndarray

    def __post_init__(self):
        if self.bits.ndim != 1 or len(self.bits) < 1:
            raise ValueError("window must be a non-empty 1-d bitmap")

    @property
    def N(self) -> int:
        return len(self.bits)

    @property
    def density(self) -> float:
        return float(np.count_nonzero(self.bits)) / self.N

    def __contains__(self, n: int) -> bool:
        return 0 <= n < self.N and bool(self.bits[n])

    def elements(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    @staticmethod
    def from_indices(N: int, idx: Iterable[int]) -> "FiniteSet":
        bits = np.zeros(N, dtype=bool)
        arr = np.fromiter((i for i in idx if 0 <= i < N), dtype=np.int64)
        bits[arr] = True
        return FiniteSet(bits)

    @staticmethod
    def full(N: int) -> "FiniteSet":
        return FiniteSet(np.ones(N, dtype=bool))

    @staticmethod
    def congruence(N: int, modulus: int, residues: Sequence[int]) -> "FiniteSet":
        n = np.arange(N)
        return FiniteSet(np.isin(n % modulus, np.asarray(residues) % modulus))

    @staticmethod
    def random(N: int, density: float, seed: int) -> "FiniteSet":
        rng = np.random.default_rng(seed)
        return FiniteSet(rng.random(N) < density)

    @staticmethod
    def from_file(path: str, N: int) -> "FiniteSet":
        with open(path) as fh:
            return FiniteSet.from_indices(N, (int(line) for line in fh if line.strip()))


@dataclass
class RecurrenceReport:
    ell: int
    witnesses: list  # (m, s) sorted by s then m
    exhaustive: bool
    counts: dict  # s -> number of m

    @property
    def s_with_witness(self) -> list:
        return sorted(s for s, c in self.counts.items() if c)


def _progression_mask(bits: np.ndarray, s: int, ell: int) -> tuple[int, np.ndarray]:
    """Start offset and mask of m with m + j s in Lambda for j = 0..ell."""
    N = len(bits)
    lo = max(0, -ell * s)
    hi = min(N, N - ell * s)  # exclusive bound on m
    if hi <= lo:
        return lo, np.zeros(0, dtype=bool)
    mask = bits[lo:hi].copy()
    for j in range(1, ell + 1):
        mask &= bits[lo + j * s : hi + j * s]
    return lo, mask


def find_progressions(lam: FiniteSet, S: Iterable[int], ell: int, first_per_s: bool = False) -> RecurrenceReport:
    """All (m, s) with ``{m, m+s, ..., m+ell s}`` inside Lambda, s in S, s != 0."""
    if ell < 1:
        raise ValueError("ell must be at least 1")
    witnesses, counts = [], {}
    for s in sorted(set(int(v) for v in S) - {0}):
        lo, mask = _progression_mask(lam.bits, s, ell)
        ms = np.flatnonzero(mask) + lo
        counts[s] = int(len(ms))
        chosen = ms[:1] if first_per_s else ms
        witnesses.extend((int(m), s) for m in chosen)
    for m, s in witnesses:
        if not all((m + j * s) in lam for j in range(ell + 1)):
            raise AssertionError(f"witness ({m}, {s}) failed re-verification")
    return RecurrenceReport(ell, witnesses, not first_per_s, counts)


def naive_progressions(members: set, N: int, S: Iterable[int], ell: int) -> dict:
    """Reference scan with plain loops and set lookups: s -> number of m."""
    counts = {}
    for s in sorted(set(S) - {0}):
        c = 0
        for m in range(N):
            ok = True
            for j in range(ell + 1):
                v = m + j * s
                if v < 0 or v >= N or v not in members:
                    ok = False
                    break
            if ok:
                c += 1
        counts[s] = c
    return counts


# ---------------------------------------------------------------------------
# parity obstruction


@dataclass(frozen=True)
class ParityVerdict:
    l: int
    block: tuple
    passed: bool
    counterexample: Optional[int] = None


LOG2 = parse("log(x)/log(2)")


def parity_obstruction(l: int, a: Expr = LOG2) -> ParityVerdict:
    """Check that ``[a(n)] = 2l + 1`` (odd) for every n in ``[2^(2l+1), 2^(2l+2))``."""
    if l < 0:
        raise ValueError("l must be non-negative")
    lo, hi = 2 ** (2 * l + 1), 2 ** (2 * l + 2)
    for n in range(lo, hi):
        if floor_eval(a, n).floor != 2 * l + 1:
            return ParityVerdict(l, (lo, hi), False, n)
    return ParityVerdict(l, (lo, hi), True)


# ---------------------------------------------------------------------------
# rotations


def _check_intervals(B: Sequence) -> list[tuple[Fraction, Fraction]]:
    out = []
    for lo, hi in B:
        lo, hi = Fraction(lo), Fraction(hi)
        if not 0 <= lo < hi <= 1:
            raise ValueError(f"bad interval [{lo}, {hi})")
        out.append((lo, hi))
    total = sum(hi - lo for lo, hi in out)
    if total <= 0 or total >= 1:
        raise ValueError("target set must be neither empty nor the whole circle")
    return out


def rotation_set(N: int, alpha, B: Sequence) -> FiniteSet:
    """``{0 <= n < N : {n alpha} in B}`` with B a union of intervals ``[lo, hi]``.

    64-bit fixed point decides clear cases; points within the fixed-point
    error of an endpoint are decided from 192-bit fractional parts.
    """
    fc = FixedConst(alpha)
    ivs = _check_intervals(B)
    n = np.arange(N, dtype=np.int64)
    u = fc.frac_of_multiples(n)
    t = u64_to_unit(u)
    inside = np.zeros(N, dtype=bool)
    tol = (N + 2) / TWO64 + 1e-15
    near = np.zeros(N, dtype=bool)
    for lo, hi in ivs:
        flo, fhi = float(lo), float(hi)
        inside |= (t >= flo) & (t <= fhi)
        near |= (np.abs(t - flo) <= tol) | (np.abs(t - fhi) <= tol)
    for i in np.flatnonzero(near):
        _, frac = fc.floor_exact(int(i))
        inside[i] = any(lo <= frac <= hi for lo, hi in ivs)
    return FiniteSet(inside)


def sequence_values(spec, n_cap: int, window: int) -> list[int]:
    """Distinct positive values below ``window`` of a sequence spec.

    ``("linear", alpha, c)`` gives ``[alpha n + c]``; ``("factorial",)`` gives
    ``n!``; a list of integers is used as is.
    """
    if isinstance(spec, (list, tuple)) and spec and spec[0] == "linear":
        _, alpha, c = spec
        fc = FixedConst(alpha)
        cc = Fraction(c)
        vals = []
        for n in range(1, n_cap + 1):
            fl, frac = fc.floor_exact(n)
            vals.append(fl + math.floor(frac + cc))
    elif isinstance(spec, (list, tuple)) and spec and spec[0] == "factorial":
        vals, f = [], 1
        for n in range(1, n_cap + 1):
            f *= n
            if f >= window:
                break
            vals.append(f)
    else:
        vals = [int(v) for v in spec][:n_cap]
    return sorted({v for v in vals if 0 < v < window})


@dataclass
class RotationReport:
    alpha: str
    density: float
    counts: dict  # s -> number of witnesses m
    tested: int
    fraction_with_witness: float


def rotation_recurrence_test(alpha, B: Sequence, seq, n_cap: int, window: int, ell: int = 1) -> RotationReport:
    """Witness statistics for Lambda = {n : {n alpha} in B} and s from a sequence."""
    lam = rotation_set(window, alpha, B)
    S = sequence_values(seq, n_cap, window)
    rep = find_progressions(lam, S, ell, first_per_s=True)
    hit = sum(1 for s in S if rep.counts.get(s, 0) > 0)
    return RotationReport(str(named_real(alpha)), lam.density, rep.counts, len(S), hit / len(S) if S else 0.0)


# ---------------------------------------------------------------------------
# double averages


def _fixed192(spec) -> tuple[FixedConst, bool]:
    fc = FixedConst(spec)
    return fc, fc.rational


def _phase(fl: int, t: Union[Fraction, float]) -> complex:
    if isinstance(t, Fraction):
        return cmath.exp(2j * math.pi * float((fl * t.numerator % t.denominator) / t.denominator))
    return cmath.exp(2j * math.pi * ((fl * t) % 1.0))


@dataclass
class AppendixReport:
    average: complex
    trend: dict  # M' -> |average at M'|

    @property
    def magnitude(self) -> float:
        return abs(self.average)


def appendix_average(
    p: Sequence[tuple],
    beta,
    t,
    box: tuple = (0.5, 0.75),
    M: int = 400,
    lengths: Callable[[int], int] = lambda m: m,
    offsets: Callable[[int], int] = lambda m: 0,
) -> AppendixReport:
    """``(1/M) sum_m (1/N_m) sum_n phi(p(n) + m beta) e([p(n) + m beta] t)``.

    p is a list of ``(coefficient, degree)`` with named-real coefficients,
    phi the indicator of ``box`` applied to the fractional part, and n runs
    over ``offsets(m) + 1 .. offsets(m) + N_m``.  Values are formed in
    192-bit fixed point, so the floors are exact away from a set of
    measure ``~ n^d 2^-192``.
    """
    fb, rat = _fixed192(beta)
    if rat:
        raise ValueError("beta must be irrational")
    t = Fraction(t) if not isinstance(t, float) else t
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    terms = [(FixedConst(c), int(d)) for c, d in p]
    if not terms:
        raise ValueError("p must have at least one term")
    bits = fb.hi_bits
    lo_box, hi_box = (Fraction(v) for v in box)
    scale = 1 << bits
    lo_i, hi_i = int(lo_box * scale), int(hi_box * scale)
    per_m = []
    for m in range(1, M + 1):
        Nm = lengths(m)
        if Nm < 1:
            raise ValueError("N_m must be positive")
        base = m * fb.full_hi
        acc = 0j
        start = offsets(m)
        for n in range(start + 1, start + Nm + 1):
            val = base + sum(n**d * fc.full_hi for fc, d in terms)
            fl = val >> bits
            frac = val - (fl << bits)
            if lo_i <= frac < hi_i:
                acc += _phase(fl, t)
        per_m.append(acc / Nm)
    trend = {}
    for Mp in sorted({max(1, M // 4), max(1, M // 2), M}):
        trend[Mp] = abs(sum(per_m[:Mp]) / Mp)
    return AppendixReport(sum(per_m) / M, trend)


@dataclass
class TheoremCReport:
    density_J: float
    samples: int
    identity_pass_rate: float
    identity_checked: int
    tolerances: dict = field(default_factory=dict)  # m -> sup |b(n) - m beta| on I_m
    skipped: list = field(default_factory=list)


def theoremC_experiment(
    c,
    p_degree: int,
    b: Expr,
    beta,
    M: int = 300,
    per_m: int = 64,
    seed: int = 0,
    tol: Callable[[int], float] = lambda m: 1 / (4 * math.sqrt(m)),
) -> TheoremCReport:
    """Density of ``J = {(m, n) : {c n^d + m beta} in [1/2, 3/4]}`` over ``S_M = {(m, n) : n in I_m}``.

    ``I_m = {n : |b(n) - m beta| <= tol(m)}``.  For sampled pairs with
    m > M/2 in J, the identity ``[c n^d + b(n)] = [c n^d + m beta]`` is
    checked with certified floors of the full expression.
    """
    info = growth_exponent(b)
    if info.k != 0 or info.classification != "strictly-between":
        raise ValueError("b must satisfy 1 < b < x in growth order")
    fc = FixedConst(c)
    fb, rat = _fixed192(beta)
    if rat:
        raise ValueError("beta must be irrational")
    a = add(mul(fc.expr, power(X, const(p_degree))), b)
    bits = fb.hi_bits
    scale = 1 << bits
    lo_i, hi_i = scale // 2, 3 * scale // 4
    rng = np.random.default_rng(seed)
    total = in_J = checked = passed = 0
    tolerances, skipped = {}, []
    for m in range(1, M + 1):
        target = Fraction(m * fb.full_hi, scale)
        d = Fraction(tol(m)).limit_denominator(10**12)
        k_m = first_at_least(b, target - d, 1)
        l_m = first_at_least(b, target + d, k_m, strict=True) - 1
        if l_m < k_m:
            skipped.append(m)
            continue
        tolerances[m] = max(abs(float(evaluate(b, n, check_threshold=False).midpoint - target)) for n in (k_m, l_m))
        width = l_m - k_m + 1
        ns = np.arange(k_m, l_m + 1) if width <= per_m else k_m + np.sort(rng.choice(width, per_m, replace=False))
        for n in ns:
            n = int(n)
            val = n**p_degree * fc.full_hi + m * fb.full_hi
            fl = val >> bits
            frac = val - (fl << bits)
            total += 1
            if lo_i <= frac <= hi_i:
                in_J += 1
                if 2 * m > M:
                    checked += 1
                    if floor_eval(a, n, check_threshold=False).floor == fl:
                        passed += 1
    if total == 0:
        raise ValueError("no intervals I_m inside the window")
    return TheoremCReport(in_J / total, total, passed / checked if checked else 0.0, checked, tolerances, skipped)
