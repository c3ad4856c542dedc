"""Symbolic PET induction on families of integer polynomials in (n; h1, ..., hr).

Each member carries an opaque function tag.  A van der Corput step picks a
minimal-degree member p_k, introduces a fresh parameter h and replaces the
family by differences ``p_i - p_k`` and ``p_j(n + h) - p_k``; the family type
``(d, w_d, ..., w_1)`` drops lexicographically until every member is linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

__all__ = [
    "ParamPoly",
    "Tag",
    "PolyFamily",
    "FamilyType",
    "StepInfo",
    "ReductionTrace",
    "AlreadyLinearError",
    "DistinctnessError",
    "DegenerateCombinationError",
    "family_type",
    "type_less",
    "vdc_step",
    "reduce_to_linear",
    "leading_coeff_structure",
    "parse_poly",
    "family_from_strings",
]


class AlreadyLinearError(ValueError):
    pass


class DistinctnessError(ValueError):
    def __init__(self, i: int, j: int, diff: "ParamPoly"):
        self.pair, self.diff = (i, j), diff
        super().__init__(f"members {i} and {j} differ by {diff}, which is constant in n")


class DegenerateCombinationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# polynomials


def _pad(e: tuple, size: int) -> tuple:
    return e + (0,) * (size - len(e))


@dataclass(frozen=True)
class ParamPoly:
    """Integer polynomial; exponent tuples are ``(e_n, e_h1, ..., e_hr)``."""

    terms: tuple  # sorted ((exponents, coef), ...), no zero coefficients
    r: int = 0
    names: tuple = ()

    @staticmethod
    def make(terms: dict, r: int, names: tuple = ()) -> "ParamPoly":
        clean = {}
        for e, c in terms.items():
            e = _pad(tuple(e), r + 1)
            if len(e) != r + 1:
                raise ValueError("exponent tuple longer than the variable count")
            if c:
                clean[e] = clean.get(e, 0) + int(c)
        return ParamPoly(tuple(sorted((e, c) for e, c in clean.items() if c)), r, names)

    @staticmethod
    def n(r: int = 0) -> "ParamPoly":
        return ParamPoly.make({(1,): 1}, r)

    @staticmethod
    def h(j: int, r: int) -> "ParamPoly":
        e = [0] * (r + 1)
        e[j] = 1
        return ParamPoly.make({tuple(e): 1}, r)

    @staticmethod
    def constant(c: int, r: int = 0) -> "ParamPoly":
        return ParamPoly.make({(): c}, r)

    @property
    def as_dict(self) -> dict:
        return dict(self.terms)

    def var_names(self) -> tuple:
        return self.names or tuple(f"h{j}" for j in range(1, self.r + 1))

    def extend(self, r: int) -> "ParamPoly":
        if r < self.r:
            raise ValueError("cannot drop parameters")
        if r == self.r:
            return self
        names = self.names + tuple(f"h{j}" for j in range(self.r + 1, r + 1)) if self.names else ()
        return ParamPoly.make({e: c for e, c in self.terms}, r, names)

    def _align(self, other: "ParamPoly"):
        r = max(self.r, other.r)
        return self.extend(r), other.extend(r), r

    def __add__(self, other: "ParamPoly") -> "ParamPoly":
        a, b, r = self._align(other)
        d = a.as_dict
        for e, c in b.terms:
            d[e] = d.get(e, 0) + c
        return ParamPoly.make(d, r, a.names or b.names)

    def __neg__(self) -> "ParamPoly":
        return ParamPoly.make({e: -c for e, c in self.terms}, self.r, self.names)

    def __sub__(self, other: "ParamPoly") -> "ParamPoly":
        return self + (-other)

    def __mul__(self, other) -> "ParamPoly":
        if isinstance(other, int):
            return ParamPoly.make({e: c * other for e, c in self.terms}, self.r, self.names)
        a, b, r = self._align(other)
        d: dict = {}
        for e1, c1 in a.terms:
            for e2, c2 in b.terms:
                e = tuple(x + y for x, y in zip(e1, e2))
                d[e] = d.get(e, 0) + c1 * c2
        return ParamPoly.make(d, r, a.names or b.names)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "ParamPoly":
        out = ParamPoly.constant(1, self.r)
        for _ in range(k):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def deg_n(self) -> int:
        """Degree in n; -1 for the zero polynomial."""
        return max((e[0] for e, _ in self.terms), default=-1)

    def leading_n(self) -> "ParamPoly":
        """Coefficient of the top power of n, as a polynomial in the parameters (n-exponent 0)."""
        d = self.deg_n()
        return ParamPoly.make({(0,) + e[1:]: c for e, c in self.terms if e[0] == d}, self.r, self.names)

    def coeff_n(self, j: int) -> "ParamPoly":
        return ParamPoly.make({(0,) + e[1:]: c for e, c in self.terms if e[0] == j}, self.r, self.names)

    def shift(self, offset: "ParamPoly") -> "ParamPoly":
        """Substitute ``n -> n + offset`` where offset is free of n."""
        if offset.deg_n() > 0:
            raise ValueError("shift must not involve n")
        base, off, r = self._align(offset)
        nvar = ParamPoly.n(r)
        out = ParamPoly.constant(0, r)
        powers = {}
        for e, c in base.terms:
            k = e[0]
            if k not in powers:
                powers[k] = (nvar + off) ** k
            rest = ParamPoly.make({(0,) + e[1:]: c}, r)
            out = out + powers[k] * rest
        return ParamPoly.make(out.as_dict, r, base.names)

    def evaluate(self, n: int, h: Sequence[int] = ()) -> int:
        vals = (n,) + tuple(h) + (0,) * (self.r - len(h))
        total = 0
        for e, c in self.terms:
            t = c
            for v, k in zip(vals, e):
                t *= v**k
            total += t
        return total

    def canonical_key(self) -> tuple:
        return (len(self.terms), tuple((tuple(-x for x in e), c) for e, c in sorted(self.terms, reverse=True)))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        names = ("n",) + self.var_names()
        parts = []
        for e, c in sorted(self.terms, key=lambda t: (-sum(t[0]), tuple(-x for x in t[0]))):
            mono = "*".join(v if k == 1 else f"{v}^{k}" for v, k in zip(names, e) if k)
            if not mono:
                s = str(abs(c))
            elif abs(c) == 1:
                s = mono
            else:
                s = f"{abs(c)}*{mono}"
            parts.append(("-" if c < 0 else "+", s))
        head = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        return head + "".join(f" {sg} {s}" for sg, s in parts[1:])

    def to_json(self) -> dict:
        return {"r": self.r, "terms": [[list(e), c] for e, c in self.terms]}


def parse_poly(text: str, r: Optional[int] = None) -> ParamPoly:
    """Parse an integer polynomial in n, h1, h2, ... (implicit multiplication allowed)."""
    import sympy
    from sympy.parsing.sympy_parser import implicit_multiplication_application, parse_expr, standard_transformations

    tr = standard_transformations + (implicit_multiplication_application,)
    try:
        expr = parse_expr(text.replace("^", "**"), transformations=tr, evaluate=True)
    except Exception as exc:  # sympy raises several unrelated types
        raise ValueError(f"cannot parse polynomial {text!r}: {exc}") from None
    syms = sorted(expr.free_symbols, key=lambda s: s.name)
    hs = []
    for s in syms:
        if s.name == "n":
            continue
        if not (s.name.startswith("h") and s.name[1:].isdigit() and int(s.name[1:]) >= 1):
            raise ValueError(f"unknown variable {s.name!r} in {text!r}")
        hs.append(int(s.name[1:]))
    rr = max(hs, default=0) if r is None else r
    gens = [sympy.Symbol("n")] + [sympy.Symbol(f"h{j}") for j in range(1, rr + 1)]
    try:
        poly = sympy.Poly(expr, *gens)
    except sympy.PolynomialError as exc:
        raise ValueError(f"{text!r} is not a polynomial in n, h1, h2, ...: {exc}") from None
    terms = {}
    for mon, c in poly.terms():
        if not c.is_integer:
            raise ValueError(f"non-integer coefficient {c} in {text!r}")
        terms[tuple(mon)] = int(c)
    return ParamPoly.make(terms, rr)


# ---------------------------------------------------------------------------
# tags


@dataclass(frozen=True)
class Tag:
    """Product of factors ``T^{shift} f`` or ``T^{shift} conj(f)``; shifts are strings."""

    factors: tuple  # ((name, conj, shift_str or ""), ...)

    @staticmethod
    def base(name: str) -> "Tag":
        return Tag(((name, False, ""),))

    def conj(self) -> "Tag":
        return Tag(tuple((nm, not cj, sh) for nm, cj, sh in self.factors))

    def shifted(self, by: ParamPoly) -> "Tag":
        s = str(by)
        return Tag(tuple((nm, cj, s if not sh else f"{sh} + {s}") for nm, cj, sh in self.factors))

    def __mul__(self, other: "Tag") -> "Tag":
        return Tag(self.factors + other.factors)

    def __str__(self) -> str:
        out = []
        for nm, cj, sh in self.factors:
            f = f"conj({nm})" if cj else nm
            out.append(f"T^({sh}){f}" if sh else f)
        return "*".join(out)


# ---------------------------------------------------------------------------
# families and types


@dataclass(frozen=True)
class PolyFamily:
    members: tuple  # ParamPoly
    tags: tuple  # Tag
    r: int
    distinguished: int = 0

    def __post_init__(self):
        if len(self.members) != len(self.tags):
            raise ValueError("one tag per member")
        if not self.members:
            raise ValueError("empty family")

    @staticmethod
    def of(members: Sequence[ParamPoly], tags: Optional[Sequence] = None, distinguished: Optional[int] = None) -> "PolyFamily":
        r = max(p.r for p in members)
        ms = tuple(p.extend(r) for p in members)
        ts = tuple(tags) if tags is not None else tuple(Tag.base(f"f{i + 1}") for i in range(len(ms)))
        if distinguished is None:
            d = max(p.deg_n() for p in ms)
            distinguished = next(i for i, p in enumerate(ms) if p.deg_n() == d)
        return PolyFamily(ms, ts, r, distinguished)

    @property
    def degree(self) -> int:
        return max(p.deg_n() for p in self.members)

    def violations(self) -> list:
        """Members constant in n, and pairs whose difference is constant in n."""
        bad = [(i, i, p) for i, p in enumerate(self.members) if p.deg_n() < 1]
        # p_i - p_j is constant in n exactly when their n-dependent terms agree
        seen: dict = {}
        for j, p in enumerate(self.members):
            key = tuple(sorted(t for t in p.extend(self.r).terms if t[0][0] >= 1))
            for i in seen.get(key, ()):
                bad.append((i, j, self.members[i] - p))
            seen.setdefault(key, []).append(j)
        return bad

    def check(self) -> None:
        v = self.violations()
        if v:
            raise DistinctnessError(*v[0])

    def __str__(self) -> str:
        return "{" + ", ".join(f"{p} [{t}]" for p, t in zip(self.members, self.tags)) + "}"

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "distinguished": self.distinguished,
            "members": [p.to_json() for p in self.members],
            "tags": [str(t) for t in self.tags],
            "type": list(family_type(self)),
        }


FamilyType = tuple  # (d, w_d, ..., w_1)


def family_type(fam: PolyFamily) -> FamilyType:
    """``(d, w_d, ..., w_1)`` with w_i the number of distinct leading coefficients at degree i."""
    d = fam.degree
    ws = []
    for i in range(d, 0, -1):
        ws.append(len({p.leading_n().terms for p in fam.members if p.deg_n() == i}))
    return (d,) + tuple(ws)


def type_less(t1: Sequence[int], t2: Sequence[int]) -> bool:
    """Lexicographic order on types; the degree is compared first."""
    return tuple(t1) < tuple(t2)


# ---------------------------------------------------------------------------
# van der Corput steps


@dataclass(frozen=True)
class StepInfo:
    kind: str  # "case1", "case2" or "single"
    k_index: int
    p_k: ParamPoly
    new_param: str
    provenance: tuple  # per output member: (i, shifted) meaning p_i(n [+ h]) - p_k(n)
    distinguished_from: int


def _domination_ok(fam: PolyFamily, k: int, h: ParamPoly) -> Optional[int]:
    """A maximal-degree member p1 != p_k whose difference with p_k dominates all others."""
    pk = fam.members[k]
    degs = [(p - pk).deg_n() for i, p in enumerate(fam.members) if i != k]
    degs += [(p.shift(h) - pk).deg_n() for p in fam.members]
    top = max(degs)
    d = fam.degree
    cands = [i for i, p in enumerate(fam.members) if i != k and p.deg_n() == d and (p - pk).deg_n() == top]
    if not cands:
        return None
    if fam.distinguished in cands:
        return fam.distinguished
    # keep the distinguished function when the role has to move to another member
    same = [i for i in cands if fam.tags[i] == fam.tags[fam.distinguished]]
    return (same or cands)[0]


def _choose_k(fam: PolyFamily, h: ParamPoly) -> tuple[int, int]:
    degs = [p.deg_n() for p in fam.members]
    d0 = min(degs)
    cands = sorted((i for i, dg in enumerate(degs) if dg == d0), key=lambda i: fam.members[i].canonical_key())
    for k in cands:
        p1 = _domination_ok(fam, k, h)
        if p1 is not None:
            return k, p1
    raise DistinctnessError(cands[0], cands[0], fam.members[cands[0]])


def vdc_step(fam: PolyFamily) -> tuple[PolyFamily, StepInfo]:
    """One van der Corput step; output order is ``p1 - pk``, unshifted differences, shifted ones."""
    if fam.degree < 2:
        raise AlreadyLinearError("family is already linear")
    fam.check()
    r = fam.r + 1
    fam_r = PolyFamily(tuple(p.extend(r) for p in fam.members), fam.tags, r, fam.distinguished)
    h = ParamPoly.h(r, r)
    name = f"h{r}"
    ms, ts = fam_r.members, fam_r.tags
    if len(ms) == 1:
        p = ms[0]
        out = PolyFamily((p.shift(h) - p,), (ts[0].conj(),), r, 0)
        out.check()
        return out, StepInfo("single", 0, p, name, ((0, True),), 0)
    k, i1 = _choose_k(fam_r, h)
    pk = ms[k]
    kind = "case2" if pk.deg_n() == 1 else "case1"
    members, tags, prov = [ms[i1] - pk], [ts[i1]], [(i1, False)]
    for i, p in enumerate(ms):
        if i in (i1, k):
            continue
        if kind == "case2" and p.deg_n() == 1:
            # p(n + h) - p_k(n) = p(n) - p_k(n) + const: both factors ride on one exponent
            c = p.shift(h) - p
            members.append(p - pk)
            tags.append(ts[i].conj().shifted(c) * ts[i])
        else:
            members.append(p - pk)
            tags.append(ts[i])
        prov.append((i, False))
    for j, p in enumerate(ms):
        if kind == "case2" and p.deg_n() == 1:
            continue  # merged above, or p_k whose shifted difference is constant
        members.append(p.shift(h) - pk)
        tags.append(ts[j].conj())
        prov.append((j, True))
    out = PolyFamily(tuple(members), tuple(tags), r, 0)
    out.check()
    return out, StepInfo(kind, k, pk, name, tuple(prov), i1)


@dataclass
class ReductionTrace:
    families: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    @property
    def types(self) -> list:
        return [family_type(f) for f in self.families]

    @property
    def final(self) -> PolyFamily:
        return self.families[-1]

    @property
    def s(self) -> int:
        return len(self.final.members)

    @property
    def r_tilde(self) -> int:
        return self.final.r - self.families[0].r

    def text(self) -> str:
        lines = []
        for i, f in enumerate(self.families):
            lines.append(f"type {family_type(f)}: {f}")
            if i < len(self.steps):
                st = self.steps[i]
                lines.append(f"  -> {st.kind}, p_k = {st.p_k}, new parameter {st.new_param}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "families": [f.to_json() for f in self.families],
            "steps": [{"kind": s.kind, "k_index": s.k_index, "p_k": str(s.p_k), "new_param": s.new_param} for s in self.steps],
            "s": self.s,
            "r_tilde": self.r_tilde,
        }


def reduce_to_linear(fam: PolyFamily, max_steps: int = 64) -> ReductionTrace:
    """Repeat vdc_step until the family is linear; the type must drop at every step."""
    fam.check()
    trace = ReductionTrace([fam], [])
    while fam.degree >= 2:
        if len(trace.steps) >= max_steps:
            raise AssertionError("type descent did not terminate within max_steps")
        new, info = vdc_step(fam)
        if not type_less(family_type(new), family_type(fam)):
            raise AssertionError(f"type did not decrease: {family_type(fam)} -> {family_type(new)}")
        trace.families.append(new)
        trace.steps.append(info)
        fam = new
    return trace


def family_from_strings(texts: Sequence[str]) -> PolyFamily:
    polys = [parse_poly(t) for t in texts]
    r = max(p.r for p in polys)
    return PolyFamily.of([p.extend(r) for p in polys])


# ---------------------------------------------------------------------------
# leading coefficients of combinations


@dataclass(frozen=True)
class LeadingStructure:
    leading: ParamPoly  # in (h..., m, q_0..q_{k-1})
    P: ParamPoly  # in h only
    degree_n: int
    factors: bool


def leading_coeff_structure(k: int, shifts: Sequence[tuple], r: int) -> LeadingStructure:
    """Leading-in-n coefficient of ``sum l_i p_m(n + s_i)`` with ``p_m = m n^k + q(n)``.

    ``shifts`` holds ``(l_i, s_i)`` where s_i is a set of indices in {1..r}
    or a length-r tuple of integer multipliers of h_1..h_r.  m and the q
    coefficients are extra symbolic parameters; the result reports whether
    the leading coefficient equals m times a polynomial P(h) free of q.
    """
    if k < 1:
        raise ValueError("k must be positive")
    nv = r + 1 + k  # h_1..h_r, m, q_0..q_{k-1}
    names = tuple(f"h{j}" for j in range(1, r + 1)) + ("m",) + tuple(f"q{i}" for i in range(k))

    def var(idx: int) -> ParamPoly:
        return ParamPoly.h(idx, nv)

    n = ParamPoly.n(nv)
    p = var(r + 1) * n**k
    for i in range(k):
        p = p + var(r + 2 + i) * n**i
    total = ParamPoly.constant(0, nv)
    for l, s in shifts:
        if isinstance(s, (set, frozenset)):
            mult = [1 if j in s else 0 for j in range(1, r + 1)]
        elif len(s) == r:
            mult = list(s)
        else:
            raise ValueError("a shift is a set of parameter indices or r integer multipliers")
        off = ParamPoly.constant(0, nv)
        for j, c in enumerate(mult, start=1):
            if c:
                off = off + var(j) * c
        total = total + p.shift(off) * int(l)
    if total.is_zero():
        raise DegenerateCombinationError("the combination vanishes identically")
    lead = ParamPoly(total.leading_n().terms, nv, names)
    m_idx = r + 1
    factors = all(e[m_idx] == 1 and not any(e[r + 2 :]) for e, _ in lead.terms)
    P_terms = {(0,) + e[1 : r + 1]: c for e, c in lead.terms if e[m_idx] == 1 and not any(e[r + 2 :])}
    P = ParamPoly.make(P_terms, r)
    return LeadingStructure(lead, P, total.deg_n(), factors)
