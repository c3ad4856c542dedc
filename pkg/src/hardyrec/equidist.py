"""Interval constructions, discrepancy, Weyl sums and van der Corput estimates."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from flint import arb, ctx

from ._fixed import FixedConst, dist_to_int_u64, frac_u64, u64_to_unit
from .certified import (
    PRECISION_CAP,
    PrecisionError,
    _raw,
    exact_value,
    to_arb,
    validity_threshold,
)
from .expr import Expr, X, const, differentiate, is_constant, power
from .growth import InconclusiveError, compare_growth

__all__ = [
    "IntervalEntry",
    "IntervalSeq",
    "EmptyIntervalError",
    "VdcBoundInput",
    "TorusEquiVerdict",
    "build_intervals",
    "compare_at",
    "first_at_least",
    "discrepancy",
    "phase",
    "weyl_sum",
    "vdc_input",
    "vdc_bound",
    "density_smallfrac",
    "torus_equi_check",
    "cesaro_interval_average",
    "TorusFunction",
]


class EmptyIntervalError(ValueError):
    def __init__(self, m: int):
        self.m = m
        super().__init__(f"interval I_m is empty for m = {m}")


# ---------------------------------------------------------------------------
# certified comparisons and monotone search


def compare_at(e: Expr, n: int, target: Fraction) -> int:
    """Sign of ``e(n) - target``, certified (exact when e(n) is rational)."""
    target = Fraction(target)
    v = exact_value(e, Fraction(n))
    if v is not None:
        return (v > target) - (v < target)
    prec = 96
    t = None
    while prec <= PRECISION_CAP:
        with ctx.workprec(prec):
            val = _compile_eval(e, n, prec)
            t = to_arb(target)
            if val > t:
                return 1
            if val < t:
                return -1
        prec *= 2
    raise PrecisionError(f"cannot separate e({n}) from {target}")


def _compile_eval(e: Expr, n, prec: int) -> arb:
    return _raw(e, Fraction(n), prec)


def first_at_least(e: Expr, target: Fraction, start: int, strict: bool = False) -> int:
    """Smallest n >= start with e(n) >= target (or > target), e eventually increasing."""
    want = 1 if strict else 0

    def ok(n):
        return compare_at(e, n, target) >= want

    if ok(start):
        return start
    lo, step = start, 1
    hi = start + step
    while not ok(hi):
        lo = hi
        step *= 2
        hi = start + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# interval sequences


@dataclass(frozen=True)
class IntervalEntry:
    m: int
    k_m: int
    l_m: int
    condition_i: bool = True

    @property
    def length(self) -> int:
        return self.l_m - self.k_m + 1

    def __iter__(self):
        return iter(range(self.k_m, self.l_m + 1))


@dataclass(frozen=True)
class IntervalSeq:
    """Intervals ``I_m = [k_m, l_m]`` with the construction case and parameters."""

    entries: tuple
    case: str
    eps: Fraction
    d_k: int
    k: int
    probe: Fraction = Fraction(1, 8)
    skipped: tuple = ()
    start: int = 1

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def upto(self, M: int) -> list[IntervalEntry]:
        return [e for e in self.entries if e.m <= M]

    def lengths_grow(self) -> bool:
        """Every length in the last third exceeds the maximum length of the first third."""
        lengths = [e.length for e in self.entries]
        if len(lengths) < 3:
            return False
        third = len(lengths) // 3
        return min(lengths[-third:]) > max(lengths[:third])


def _case(a: Expr, k: int, probe: Fraction) -> str:
    cmp = compare_growth(a, power(X, const(k + probe)))
    return "Case1" if cmp.relation == "<" else "Case2"


def build_intervals(
    a: Expr,
    k: int,
    eps,
    d_k: int,
    m_range: Iterable[int],
    *,
    probe: Fraction = Fraction(1, 8),
    skip_empty: bool = False,
    case: Optional[str] = None,
    start: Optional[int] = None,
) -> IntervalSeq:
    """Intervals on which the k-th derivative of ``a`` sits in ``[d_k m, d_k m + eps]``.

    Case 1 (``a`` below ``x^(k+probe)``) uses ``[k_m, k_m + ceil(k_m^(3/4))]``;
    Case 2 uses the exact level set of the k-th derivative.  ``case`` may
    force the construction, otherwise it is decided by the growth probe.
    """
    eps = Fraction(eps).limit_denominator(10**12) if not isinstance(eps, Fraction) else eps
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if case is None:
        case = _case(a, k, probe)
    if case not in ("Case1", "Case2"):
        raise ValueError("case must be Case1 or Case2")
    ak = differentiate(a, k)
    n0 = max(validity_threshold(ak), validity_threshold(a), 1) if start is None else start
    entries = []
    skipped = []
    cursor = n0
    for m in m_range:
        lo_t = Fraction(d_k * m)
        hi_t = lo_t + eps
        k_m = first_at_least(ak, lo_t, cursor)
        if case == "Case1":
            l_m = k_m + _ceil_pow34(k_m)
            cond = compare_at(ak, l_m, hi_t) <= 0
        else:
            l_m = first_at_least(ak, hi_t, k_m, strict=True) - 1
            cond = True
        if l_m < k_m:
            if skip_empty:
                skipped.append(m)
                cursor = k_m
                continue
            raise EmptyIntervalError(m)
        entries.append(IntervalEntry(m, k_m, l_m, cond))
        cursor = k_m
    return IntervalSeq(tuple(entries), case, eps, d_k, k, probe, tuple(skipped), n0)


def _ceil_pow34(n: int) -> int:
    """ceil(n^(3/4)) exactly."""
    import gmpy2

    r, exact = gmpy2.iroot(gmpy2.mpz(n) ** 3, 4)
    return int(r) + (0 if exact else 1)


# ---------------------------------------------------------------------------
# discrepancy


def discrepancy(points, g: int = 64) -> tuple[float, Optional[int]]:
    """Star discrepancy: exact in dimension 1, grid upper estimate in dimensions 2 and 3.

    Returns ``(value, g)`` with ``g = None`` for the exact one-dimensional case.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("discrepancy of an empty point set")
    pts = np.mod(pts, 1.0)
    if pts.ndim == 1 or pts.shape[1] == 1:
        x = np.sort(pts.reshape(-1))
        n = len(x)
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - x), np.max(x - (i - 1) / n))), None
    n, d = pts.shape
    if d > 3:
        raise ValueError("grid discrepancy supports d <= 3")
    idx = np.minimum((pts * g).astype(np.int64), g - 1)
    hist = np.zeros((g,) * d, dtype=np.int64)
    np.add.at(hist, tuple(idx.T), 1)
    cum = hist
    for axis in range(d):
        cum = np.cumsum(cum, axis=axis)
    # S[i] = number of points with every coordinate below i/g, i in 0..g
    S = np.zeros((g + 1,) * d, dtype=np.int64)
    S[(slice(1, None),) * d] = cum
    grids = np.meshgrid(*([np.arange(g)] * d), indexing="ij")
    vol_lo = np.ones((g,) * d)
    vol_hi = np.ones((g,) * d)
    for gi in grids:
        vol_lo = vol_lo * (gi / g)
        vol_hi = vol_hi * ((gi + 1) / g)
    upper = S[(slice(1, None),) * d] / n - vol_lo
    lower = vol_hi - S[(slice(0, g),) * d] / n
    return float(max(upper.max(), lower.max(), 0.0)), g


# ---------------------------------------------------------------------------
# exponential sums


def phase(f: Expr, n: int, abs_tol: float = 1e-12) -> float:
    """``f(n) mod 1`` folded to (-1/2, 1/2], with absolute error below ``abs_tol``."""
    v = exact_value(f, Fraction(n))
    if v is not None:
        r = v - round(v)
        return float(r)
    prec = 96
    while prec <= PRECISION_CAP:
        val = _raw(f, Fraction(n), prec)
        if val.is_finite():
            with ctx.workprec(prec):
                mid = val.mid()
                near = mid.floor() if (mid - mid.floor()) < 0.5 else mid.ceil()
                r = val - near
            if float(r.rad()) < abs_tol:
                return float(r.mid())
            mag = abs(float(mid)) if abs(float(mid)) < 1e300 else 1e300
            prec = max(2 * prec, 64 + int(math.log2(max(mag, 1.0))) + 48)
        else:
            prec *= 2
    raise PrecisionError(f"phase of f({n}) not resolved")


def weyl_sum(f: Expr, interval: tuple[int, int], s: int = 1) -> complex:
    """``(1/(l-k+1)) sum_{n=k}^{l} e(s f(n))``."""
    k, l = interval
    if s == 0:
        raise ValueError("s must be non-zero")
    if l < k:
        raise ValueError("empty interval")
    if not is_constant(f) and k < validity_threshold(f):
        raise ValueError("interval starts below the validity threshold")
    total = 0j
    for n in range(k, l + 1):
        total += cmath.exp(2j * math.pi * s * phase(f, n))
    return total / (l - k + 1)


def direct_sum(f: Expr, k: int, l: int) -> complex:
    """Unnormalised ``sum_{n=k}^{l} e(f(n))``."""
    return sum(cmath.exp(2j * math.pi * phase(f, n)) for n in range(k, l + 1))


@dataclass(frozen=True)
class VdcBoundInput:
    f: Expr
    k: int
    l: int
    rho: float
    sign: int


def vdc_input(f: Expr, k: int, l: int, grid: int = 9) -> VdcBoundInput:
    """Certify the hypotheses of the van der Corput bound on ``[k, l]``.

    The second derivative must have one sign at both endpoints and a third
    derivative of constant sign on a grid of the interval; rho is then the
    smaller endpoint value of ``|f''|``.
    """
    if not k < l:
        raise ValueError("need k < l")
    f2 = differentiate(f, 2)
    f3 = differentiate(f, 3)
    ends = [_eval_ball(f2, n) for n in (k, l)]
    if any(v.contains(0) for v in ends):
        raise ValueError("rho <= 0: f'' vanishes (or is not separated from 0) at an endpoint")
    signs = {1 if v > 0 else -1 for v in ends}
    if len(signs) != 1:
        raise ValueError("f'' changes sign on the interval")
    sign = signs.pop()
    pts = sorted({k + (l - k) * j // (grid - 1) for j in range(grid)})
    third = [_eval_ball(f3, n) for n in pts]
    if not (all(v.contains(0) and v.is_zero() for v in third) or all(v >= 0 for v in third) or all(v <= 0 for v in third)):
        raise ValueError("f'' is not monotone on the interval")
    with ctx.workprec(128):
        rho = min(abs(ends[0]), abs(ends[1]))
        rho_lo = float(rho.lower())
    if rho_lo <= 0:
        raise ValueError("rho <= 0")
    return VdcBoundInput(f, k, l, rho_lo, sign)


def _eval_ball(e: Expr, n) -> arb:
    v = exact_value(e, Fraction(n))
    if v is not None:
        return to_arb(v)
    return _raw(e, Fraction(n), 128)


def vdc_bound(inp: VdcBoundInput) -> float:
    """``(|f'(l) - f'(k)| + 2) (4/sqrt(rho) + 3)`` rounded upward."""
    if not inp.rho > 0:
        raise ValueError("rho must be positive")
    f1 = differentiate(inp.f, 1)
    with ctx.workprec(128):
        d = abs(_eval_ball(f1, inp.l) - _eval_ball(f1, inp.k))
        bound = (d + 2) * (4 / arb(inp.rho).sqrt() + 3)
        return float(bound.upper()) * (1 + 1e-15)


# ---------------------------------------------------------------------------
# density of small fractional parts


def _e_schedule(spec: Union[str, Callable[[np.ndarray], np.ndarray]]):
    if callable(spec):
        return spec
    if spec == "inv_log":
        return lambda m: 1.0 / np.log(m + 2.0)
    if spec.startswith("power:"):
        s = float(Fraction(spec.split(":", 1)[1]))
        if s <= 0:
            raise ValueError("power schedule needs a positive exponent")
        return lambda m: np.power(m.astype(np.float64), -s)
    if spec.startswith("const"):
        raise ValueError("a constant schedule does not tend to zero")
    raise ValueError(f"unknown schedule {spec!r}")


def density_smallfrac(B: Sequence, K: Sequence[int], e: Union[str, Callable], M: int) -> float:
    """Fraction of m <= M with ``||m^k alpha|| <= e_m`` for some alpha in B, k in K."""
    if M < 1:
        raise ValueError("M must be positive")
    consts = [FixedConst(b) for b in B]
    for c in consts:
        if c.rational:
            raise ValueError(f"{c.expr} is rational")
    sched = _e_schedule(e)
    m = np.arange(1, M + 1, dtype=np.int64)
    em = sched(m)
    hit = np.zeros(M, dtype=bool)
    for c in consts:
        for k in K:
            mk = np.power(m.astype(np.uint64), np.uint64(k))
            u = frac_u64(c.frac64, mk.view(np.int64))
            dist = dist_to_int_u64(u)
            err = (m.astype(np.float64) ** k + 2.0) / 2.0**64
            hit |= dist <= em - err
            unsure = np.flatnonzero(np.abs(dist - em) <= err)
            for i in unsure:
                mm = int(m[i])
                _, frac = c.floor_exact(mm**k)
                d = min(frac, 1 - frac)
                if float(d) <= float(em[i]):
                    hit[i] = True
    return float(hit.mean())


# ---------------------------------------------------------------------------
# torus check


@dataclass(frozen=True)
class TorusEquiVerdict:
    equidistributed: bool
    discrepancy: float
    k: Optional[int] = None
    norm_k_alpha: Optional[float] = None
    witness_bound: Optional[float] = None


def torus_equi_check(alpha, d: int, q: Sequence[int] = (), N: int = 1000, delta: float = 0.1, C: float = 2.0) -> TorusEquiVerdict:
    """Discrepancy of ``n^d alpha + q(n)`` for n <= N, with a small-frequency witness when it is large.

    ``q`` lists integer coefficients (constant first) and must have degree
    below d; integer shifts do not move points on the circle.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if d < 1:
        raise ValueError("d must be positive")
    if len(q) > d:
        raise ValueError("q must have degree < d")
    if any(Fraction(c).denominator != 1 for c in q):
        raise ValueError("q must have integer coefficients")
    c = FixedConst(alpha)
    n = np.arange(1, N + 1, dtype=np.uint64)
    nd = np.power(n, np.uint64(d))
    pts = u64_to_unit(frac_u64(c.frac64, nd.view(np.int64)))
    disc, _ = discrepancy(pts)
    if disc < delta:
        return TorusEquiVerdict(True, disc)
    kmax = max(1, int(math.floor(delta ** (-C))))
    ks = np.arange(1, kmax + 1, dtype=np.int64)
    dist = dist_to_int_u64(frac_u64(c.frac64, ks))
    best = int(np.argmin(dist))
    kbest = int(ks[best])
    _, frac = c.floor_exact(kbest)
    norm = float(min(frac, 1 - frac))
    if c.rational:
        v = exact_value(c.expr, Fraction(0)) * kbest
        norm = float(min(v - math.floor(v), math.ceil(v) - v))
    return TorusEquiVerdict(False, disc, kbest, norm, norm * float(N) ** d)


# ---------------------------------------------------------------------------
# averages along interval sequences


@dataclass(frozen=True)
class TorusFunction:
    """``char`` e(l . t) for an integer vector l, ``box`` indicator of a product of intervals, or ``one``."""

    kind: str
    freq: tuple = ()
    box: tuple = ()

    @staticmethod
    def character(*freq: int) -> "TorusFunction":
        return TorusFunction("char", tuple(freq))

    @staticmethod
    def indicator(*box: tuple) -> "TorusFunction":
        return TorusFunction("box", box=tuple((float(a), float(b)) for a, b in box))

    def integral(self) -> complex:
        if self.kind == "one":
            return 1.0
        if self.kind == "char":
            return 1.0 if all(f == 0 for f in self.freq) else 0.0
        out = 1.0
        for a, b in self.box:
            out *= max(0.0, min(b, 1.0) - max(a, 0.0))
        return out

    def __call__(self, t: Sequence[float]) -> complex:
        if self.kind == "one":
            return 1.0
        if self.kind == "char":
            return cmath.exp(2j * math.pi * sum(f * x for f, x in zip(self.freq, t)))
        ok = all(a <= (x % 1.0) < b for (a, b), x in zip(self.box, t))
        return 1.0 if ok else 0.0


def cesaro_interval_average(
    phi: TorusFunction,
    components: Sequence,
    intervals: IntervalSeq,
    M: int,
) -> complex:
    """``(1/#m) sum_{m<=M} (1/|I_m|) sum_{n in I_m} phi({a_1(n)}, ..., {a_j(n)})``."""
    comps = [c if isinstance(c, Expr) else const(Fraction(c)) for c in components]
    rows = intervals.upto(M)
    if not rows:
        raise ValueError("no intervals with m <= M")
    total = 0j
    for entry in rows:
        inner = 0j
        for n in entry:
            inner += phi([phase(c, n) % 1.0 for c in comps])
        total += inner / entry.length
    return total / len(rows)
