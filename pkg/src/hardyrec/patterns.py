"""Anchors, certified polynomial progressions inside ``{[a(n)]}``, and rescaling of AP blocks.

An anchor is an integer n where the scaled derivatives ``a^(i)(n)/i!``
(i = 0..k) all have small fractional parts, the top one has floor r*m and
the others have floors divisible by r.  Near an anchor Taylor's formula says
``[a(n + j)]`` follows the integer polynomial ``sum_i [a^(i)(n)/i!] j^i`` for
a while; the certificate records how long, by direct evaluation only.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial, gcd
from typing import Callable, Optional, Sequence, Union

from .certified import floor_eval, validity_threshold
from .equidist import first_at_least
from .expr import X, Expr, add, const, differentiate, mul
from .growth import growth_exponent

__all__ = [
    "AnchorNotFound",
    "AnchorResult",
    "PatternCertificate",
    "MiningReport",
    "APBlock",
    "scaled_derivative",
    "find_anchor",
    "recheck_anchor",
    "certify_pattern",
    "default_eps",
    "mine_patterns",
    "max_n_in",
    "rescale_progressions",
]

DEFAULT_SEARCH_CAP = 100_000


class AnchorNotFound(LookupError):
    def __init__(self, r: int, m: int, window: tuple, scanned: int):
        self.r, self.m, self.window, self.scanned = r, m, window, scanned
        super().__init__(f"no anchor for r={r}, m={m} among {scanned} candidates in window {window}")


@dataclass(frozen=True)
class AnchorResult:
    r: int
    m: int
    n_anchor: int
    eps_achieved: Fraction
    floors: tuple  # [a^(i)(n)/i!] for i = 0..k
    fracs: tuple = ()  # certified upper bounds of the fractional parts
    k: int = 1
    degenerate: bool = False


@dataclass(frozen=True)
class PatternCertificate:
    r: int
    m: int
    coefficients: tuple  # c_0..c_{k-1}
    N: int
    anchor: AnchorResult
    verified_through: int
    predicted_N: int = 0
    k: int = 1

    def value(self, n: int) -> int:
        """``r * (m n^k + sum c_i n^i)``."""
        return self.r * (self.m * n**self.k + sum(c * n**i for i, c in enumerate(self.coefficients)))

    def progression(self) -> list[int]:
        return [self.value(n) for n in range(1, self.N + 1)]


@lru_cache(maxsize=256)
def scaled_derivative(a: Expr, i: int) -> Expr:
    """``a^(i) / i!`` as an expression."""
    return mul(const(Fraction(1, factorial(i))), differentiate(a, i))


def _upper(fr) -> Fraction:
    return fr.frac.upper if not fr.exact else fr.frac.midpoint


def _anchor_test(a: Expr, k: int, r: int, m: int, eps: Fraction, n: int, min_precision: int = 64):
    """Return (floors, frac upper bounds) if n satisfies all anchor conditions, else None."""
    floors_, fracs = [], []
    # cheapest rejection first: the value itself, then higher derivatives
    for i in range(k + 1):
        fr = floor_eval(scaled_derivative(a, i), n, min_precision=min_precision, check_threshold=False)
        up = _upper(fr)
        if up > eps:
            return None
        if i < k and fr.floor % r != 0:
            return None
        if i == k and fr.floor != r * m:
            return None
        floors_.append(fr.floor)
        fracs.append(up)
    return tuple(floors_), tuple(fracs)


def _start(a: Expr, k: int) -> int:
    return max(1, validity_threshold(a), validity_threshold(scaled_derivative(a, k)))


def find_anchor(
    a: Expr,
    k: int,
    r: int,
    m: int,
    eps,
    search_cap: Optional[int] = None,
    start: Optional[int] = None,
) -> AnchorResult:
    """First n with ``r m <= a^(k)(n)/k! <= r m + eps`` meeting the anchor conditions.

    The window is where the top scaled derivative lies in ``[rm, rm + eps]``;
    outside it the top floor or fractional condition fails, so scanning it
    in order is exhaustive up to ``search_cap`` tested candidates.
    """
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if k < 1 or r < 1 or m < 1:
        raise ValueError("k, r, m must be positive")
    dk = scaled_derivative(a, k)
    s = _start(a, k) if start is None else start
    lo = first_at_least(dk, Fraction(r * m), s)
    hi = first_at_least(dk, Fraction(r * m) + eps, lo, strict=True) - 1
    cap = DEFAULT_SEARCH_CAP if search_cap is None else search_cap
    # for k = 1 the window has [a'] = rm, so {a(n)} = {b(n)} with b = a - rm x
    # increasing and slow; between integer crossings of b no n can qualify
    b = add(a, mul(const(-r * m), X)) if k == 1 else None
    n, tested = lo, 0
    while n <= hi and tested < cap:
        got = _anchor_test(a, k, r, m, eps, n)
        tested += 1
        if got is not None:
            floors_, fracs = got
            return AnchorResult(r, m, n, max(fracs), floors_, fracs, k)
        if b is not None:
            # [a(n)] = r m n + [b(n)], so the parity of [a] is that of [b]
            fb = floor_eval(b, n, check_threshold=False)
            if fb.floor % r:
                n = first_at_least(b, Fraction(fb.floor + r - fb.floor % r), n + 1)
                continue
            if _upper(fb) > eps:
                n = first_at_least(b, Fraction(fb.floor + r), n + 1)
                continue
        n += 1
    raise AnchorNotFound(r, m, (lo, hi), tested)


def recheck_anchor(a: Expr, anchor: AnchorResult) -> bool:
    """Re-derive every anchor condition from fresh floors at doubled precision."""
    if anchor.degenerate:
        fr = floor_eval(a, anchor.n_anchor + 1, min_precision=128, check_threshold=False)
        return fr.floor == anchor.r * anchor.m
    got = _anchor_test(a, anchor.k, anchor.r, anchor.m, anchor.eps_achieved, anchor.n_anchor, min_precision=128)
    return got is not None and got[0] == anchor.floors


def _predict_N(a: Expr, k: int, anchor: AnchorResult, N_try: int) -> int:
    """Largest n with ``sum frac_i n^i + n^(k+1) |a^(k+1)(n0)|/(k+1)! <= 1/2`` (heuristic)."""
    fr = floor_eval(scaled_derivative(a, k + 1), anchor.n_anchor, check_threshold=False)
    top = abs(float(fr.floor + fr.frac.midpoint))
    fr_f = [float(f) for f in anchor.fracs]
    n = 0
    while n < N_try:
        t = n + 1
        if sum(f * t**i for i, f in enumerate(fr_f)) + top * t ** (k + 1) > 0.5:
            break
        n = t
    return n


def certify_pattern(a: Expr, k: int, anchor: AnchorResult, N_try: int) -> PatternCertificate:
    """Verify ``[a(n0 + n)] = r (m n^k + sum c_i n^i)`` for n = 1, 2, ... up to the first failure."""
    if N_try < 1:
        raise ValueError("N_try must be positive: an empty verification certifies nothing")
    r, m, n0 = anchor.r, anchor.m, anchor.n_anchor
    if anchor.degenerate:
        coeffs: tuple = ()
        kk = 0
    else:
        if any(f % r for f in anchor.floors[:k]):
            raise ValueError("anchor floors are not divisible by r")
        coeffs = tuple(f // r for f in anchor.floors[:k])
        kk = k
    N = 0
    for n in range(1, N_try + 1):
        want = r * (m * n**kk + sum(c * n**i for i, c in enumerate(coeffs)))
        if floor_eval(a, n0 + n, check_threshold=False).floor != want:
            break
        N = n
    if N == 0:
        raise ValueError(f"anchor n={n0} unusable: the first step already fails")
    predicted = 1 if anchor.degenerate else _predict_N(a, k, anchor, N_try)
    return PatternCertificate(r, m, coeffs, N, anchor, N, predicted, kk)


def default_eps(m: int) -> Fraction:
    """The staircase ``1 / ceil(log(m + 2))``."""
    return Fraction(1, math.ceil(math.log(m + 2)))


@dataclass
class MiningReport:
    k: int
    r: int
    certificates: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (m, reason)
    eps: dict = field(default_factory=dict)

    @property
    def trend_up(self) -> bool:
        """Max certified N over the last third of m exceeds that over the first third."""
        ms = sorted(self.eps)
        if len(ms) < 3:
            return False
        t = len(ms) // 3
        return max_n_in(self.certificates, ms[-t], ms[-1]) > max_n_in(self.certificates, ms[0], ms[t - 1])


def max_n_in(certs: Sequence[PatternCertificate], m_lo: int, m_hi: int) -> int:
    return max((c.N for c in certs if m_lo <= c.m <= m_hi), default=0)


def _degenerate(a: Expr, r: int, m: int, N_try: int) -> PatternCertificate:
    s = max(1, validity_threshold(a))
    n1 = first_at_least(a, Fraction(r * m), s)
    fr1 = floor_eval(a, n1, check_threshold=False)
    if fr1.floor != r * m or n1 - 1 < s:
        raise AnchorNotFound(r, m, (n1, n1), 1)
    fr0 = floor_eval(a, n1 - 1, check_threshold=False)
    anchor = AnchorResult(r, m, n1 - 1, _upper(fr0), (fr0.floor,), (_upper(fr0),), 0, degenerate=True)
    return certify_pattern(a, 0, anchor, N_try)


def _mine_one(task):
    a, k, r, m, eps, N_try, search_cap = task
    try:
        if k == 0:
            return m, eps, _degenerate(a, r, m, N_try), None
        anchor = find_anchor(a, k, r, m, eps, search_cap)
        return m, eps, certify_pattern(a, k, anchor, N_try), None
    except (AnchorNotFound, ValueError) as exc:
        return m, eps, None, str(exc)


def mine_patterns(
    a: Expr,
    r: int,
    m_range: Sequence[int],
    eps_schedule: Union[Callable[[int], Fraction], None] = None,
    *,
    k: Optional[int] = None,
    N_try: int = 1000,
    search_cap: Optional[int] = None,
    jobs: int = 1,
) -> MiningReport:
    """Anchor and certify one progression per m; failures are recorded, not raised."""
    if k is None:
        info = growth_exponent(a)
        if info.classification != "strictly-between":
            raise ValueError(f"growth class {info.classification!r} is not admissible")
        k = info.k
    sched = eps_schedule or default_eps
    tasks = [(a, k, r, m, Fraction(sched(m)), N_try, search_cap) for m in m_range]
    report = MiningReport(k, r)
    # python-flint keeps its working precision in one process-wide context,
    # so parallel work runs in processes to keep every result reproducible
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_mine_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_mine_one(t) for t in tasks]
    for m, eps, cert, err in sorted(results, key=lambda t: t[0]):
        report.eps[m] = eps
        if cert is not None:
            report.certificates.append(cert)
        else:
            report.failures.append((m, err))
    return report


# ---------------------------------------------------------------------------
# rescaling of arithmetic-progression blocks


@dataclass(frozen=True)
class APBlock:
    """``{c + m n : 1 <= n <= N}``."""

    c: int
    m: int
    N: int

    def elements(self) -> list[int]:
        return [self.c + self.m * n for n in range(1, self.N + 1)]

    def __contains__(self, v: int) -> bool:
        if self.m == 0:
            return self.N >= 1 and v == self.c
        q, rem = divmod(v - self.c, self.m)
        return rem == 0 and 1 <= q <= self.N


def rescale_progressions(blocks: Sequence[APBlock], r: int) -> list[APBlock]:
    """For each block emit ``(c', m, N')`` with ``r (c' + m n)`` in the block for n <= N'.

    Picks the least ``0 <= k < r`` with ``m k = -c (mod r)`` (k = 0 stands
    for the residue of k = r, so r = 1 keeps c unchanged); then
    ``c + m (k + r n) = r (c' + m n)`` with ``c' = (c + m k)/r``.  Such k
    exists exactly when ``gcd(m, r)`` divides c; otherwise the block holds no
    multiple of r and ValueError is raised.  ``N' = floor((N - r)/(d r))``
    with ``d = gcd(r, m)``, which keeps ``k + r n <= N``.
    """
    if r < 1:
        raise ValueError("r must be positive")
    out = []
    for b in blocks:
        d = gcd(r, b.m)
        ks = [k for k in range(r) if (b.m * k + b.c) % r == 0]
        if not ks:
            raise ValueError(f"block (c={b.c}, m={b.m}) contains no multiple of r={r}: gcd(m, r)={d} does not divide c")
        k = ks[0]
        c_new = (b.c + b.m * k) // r
        N_new = max(0, (b.N - r) // (d * r))
        nb = APBlock(c_new, b.m, N_new)
        for n in range(1, N_new + 1):
            v = r * (c_new + b.m * n)
            if v not in b:
                raise AssertionError(f"rescaled element {v} escaped its source block")
        out.append(nb)
    return out
