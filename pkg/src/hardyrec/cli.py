"""Command-line runner: ``hardyrec {seq,equi,nil,mine,pet,recur}``.

Parameters come from defaults, then an optional JSON config file, then
flags.  Every output record carries the config hash and package version;
equal configs give byte-identical outputs.  Exit codes: 0 success,
1 computation error, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Optional

from . import __version__

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parameter schema


def _int(v) -> int:
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    if isinstance(v, int):
        return v
    return int(str(v), 0)


def _pos_int(v) -> int:
    i = _int(v)
    if i < 1:
        raise ValueError("expected a positive integer")
    return i


def _frac01(v) -> str:
    f = Fraction(str(v))
    if not 0 < f < 1:
        raise ValueError("expected a number in (0, 1)")
    return str(f)


def _range(v) -> list:
    """``"10..200"`` (inclusive) or a list of integers."""
    if isinstance(v, list):
        return [_int(x) for x in v]
    s = str(v)
    if ".." in s:
        lo, hi = s.split("..", 1)
        lo_i, hi_i = _int(lo), _int(hi)
        if hi_i < lo_i:
            return []
        return [lo_i, hi_i]
    return [_int(x) for x in s.split(",") if x.strip()]


def _expand_range(v: list, spec: Any) -> list[int]:
    s = str(spec)
    if isinstance(spec, str) and ".." in s:
        return list(range(v[0], v[1] + 1)) if v else []
    return v


def _str(v) -> str:
    if not isinstance(v, str):
        raise ValueError("expected a string")
    return v


def _box(v) -> list:
    parts = v if isinstance(v, list) else str(v).split(",")
    if len(parts) != 2:
        raise ValueError("expected lo,hi")
    lo, hi = (str(Fraction(str(p).strip())) for p in parts)
    if not 0 <= Fraction(lo) < Fraction(hi) <= 1:
        raise ValueError("need 0 <= lo < hi <= 1")
    return [lo, hi]


def _choice(*opts):
    def f(v):
        if v not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return v

    return f


@dataclass(frozen=True)
class Param:
    conv: Callable
    default: Any
    help: str


COMMON = {
    "seed": Param(_int, 0, "seed for every random choice"),
    "jobs": Param(_pos_int, 1, "worker processes for mining (results are merged in a fixed order)"),
    "out": Param(_str, None, "output prefix: writes PREFIX.jsonl and PREFIX.csv (default: JSON lines on stdout)"),
    "precision": Param(_pos_int, 64, "minimum working precision in bits"),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "seq": {
        "expr": Param(_str, None, "Hardy-field expression in x"),
        "n_lo": Param(_pos_int, 1, "first n"),
        "n_hi": Param(_pos_int, 100, "last n"),
    },
    "equi": {
        "expr": Param(_str, None, "Hardy-field expression in x"),
        "k": Param(_int, None, "growth exponent, detected when omitted"),
        "eps": Param(_frac01, "1/10", "window width epsilon"),
        "d_k": Param(_pos_int, 1, "derivative level step d_k"),
        "m": Param(_range, "1..100", "m values, LO..HI or a comma list"),
        "case": Param(_choice("auto", "Case1", "Case2"), "auto", "interval construction"),
    },
    "nil": {
        "alpha1": Param(_str, "sqrt2", "x1 coordinate of a (named real)"),
        "alpha2": Param(_str, "sqrt3", "x2 coordinate of a (named real)"),
        "a_m": Param(_int, 1, "integer coordinate m of a"),
        "M": Param(_pos_int, 300, "number of outer terms"),
        "k": Param(_pos_int, 1, "exponent k in m n^k + q_m(n)"),
        "char": Param(_str, "1,0", "character frequencies p,q of e(p t1 + q t2)"),
    },
    "mine": {
        "expr": Param(_str, None, "Hardy-field expression in x"),
        "r": Param(_pos_int, 1, "rescaling r"),
        "m": Param(_range, "10..200", "m values, LO..HI or a comma list"),
        "k": Param(_int, None, "growth exponent, detected when omitted"),
        "n_try": Param(_pos_int, 1000, "longest progression to verify"),
        "search_cap": Param(_pos_int, 100000, "anchor candidates tested per m"),
    },
    "pet": {
        "family": Param(_str, None, "comma-separated polynomials in n (and h1, h2, ...)"),
        "max_steps": Param(_pos_int, 64, "step limit"),
    },
    "recur": {
        "source": Param(_choice("congruence", "rotation", "random", "file"), "rotation", "how Lambda is built"),
        "window": Param(_pos_int, 100000, "window size N"),
        "alpha": Param(_str, "sqrt5", "rotation number"),
        "box": Param(_box, "1/2,3/4", "target interval for rotation sets"),
        "modulus": Param(_pos_int, 2, "modulus for congruence sets"),
        "residues": Param(_range, "0", "residues for congruence sets"),
        "density": Param(_frac01, "1/2", "density for random sets"),
        "file": Param(_str, None, "file of integers, one per line"),
        "seq": Param(_str, "linear:sqrt5:2", "linear:ALPHA:C, factorial, or a comma list of integers"),
        "n_cap": Param(_pos_int, 20000, "number of sequence terms"),
        "ell": Param(_pos_int, 1, "progression length parameter"),
    },
}

REQUIRED = {"seq": ["expr"], "equi": ["expr"], "mine": ["expr"], "pet": ["family"]}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hardyrec", description="Experiments on integer parts of Hardy-field sequences.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, schema in SCHEMAS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", default=None, help="JSON config file (flags override it)")
        for name, prm in {**schema, **COMMON}.items():
            sp.add_argument(_flag(name), dest=name, default=None, help=f"{prm.help} (default: {prm.default})")
    return p


def resolve_config(command: str, file_cfg: dict, flags: dict) -> dict:
    """Merge defaults < file < flags and validate every value."""
    schema = {**SCHEMAS[command], **COMMON}
    unknown = sorted(set(file_cfg) - set(schema) - {"command"})
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if file_cfg.get("command", command) != command:
        raise ConfigError(f"config file is for {file_cfg['command']!r}, not {command!r}")
    raw = {k: prm.default for k, prm in schema.items()}
    raw.update({k: v for k, v in file_cfg.items() if k != "command"})
    raw.update({k: v for k, v in flags.items() if v is not None})
    cfg = {}
    for k, prm in schema.items():
        v = raw[k]
        if v is None:
            cfg[k] = None
            continue
        try:
            cfg[k] = prm.conv(v)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"invalid value for {k}: {v!r} ({exc})") from None
        if prm.conv is _range:
            cfg[k] = _expand_range(cfg[k], v)
    for k in REQUIRED.get(command, []):
        if cfg[k] is None:
            raise ConfigError(f"missing required parameter {k}")
    cfg["command"] = command
    return cfg


# keys that change where or how fast results are produced, never what they are
NON_SEMANTIC = ("out", "jobs")


def config_hash(cfg: dict) -> str:
    core = {k: v for k, v in cfg.items() if k not in NON_SEMANTIC}
    blob = json.dumps(core, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# output


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if hasattr(v, "item"):  # numpy scalars
        return v.item()
    return v


class Sink:
    def __init__(self, cfg: dict):
        self.hash = config_hash(cfg)
        self.lines = io.StringIO()
        self.rows: list = []
        self.header: Optional[list] = None
        self.text: Optional[str] = None

    def emit(self, event: str, **fields) -> None:
        rec = {"schema": SCHEMA_VERSION, "version": __version__, "config_hash": self.hash, "event": event}
        rec.update({k: _jsonable(v) for k, v in fields.items()})
        self.lines.write(json.dumps(rec, sort_keys=True) + "\n")

    def row(self, header: list, values: list) -> None:
        self.header = header
        self.rows.append([_jsonable(v) for v in values])

    def write(self, out: Optional[str]) -> None:
        if out is None:
            sys.stdout.write(self.lines.getvalue())
            if self.text:
                sys.stdout.write(self.text + "\n")
            return
        with open(out + ".jsonl", "w", newline="") as fh:
            fh.write(self.lines.getvalue())
        if self.header is not None:
            with open(out + ".csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["config_hash", "version"] + self.header)
                for r in self.rows:
                    w.writerow([self.hash, __version__] + r)
        if self.text is not None:
            with open(out + ".txt", "w") as fh:
                fh.write(self.text + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _expr(text: str):
    from .expr import ParseError, parse

    try:
        return parse(text)
    except ParseError as exc:
        raise ConfigError(str(exc)) from None


def _k_for(a, k):
    if k is not None:
        return k
    from .growth import growth_exponent

    info = growth_exponent(a)
    if info.classification != "strictly-between":
        raise ValueError(f"growth class {info.classification} is not admissible")
    return info.k


def run_seq(cfg: dict, sink: Sink) -> None:
    from .certified import floor_eval
    from .growth import growth_exponent

    a = _expr(cfg["expr"])
    if cfg["n_hi"] < cfg["n_lo"]:
        raise ConfigError("n_hi must not be below n_lo")
    info = growth_exponent(a)
    sink.emit("growth", k=info.k, classification=info.classification, threshold=info.threshold, leading=info.leading)
    for n in range(cfg["n_lo"], cfg["n_hi"] + 1):
        fr = floor_eval(a, n, min_precision=cfg["precision"])
        frac = float(fr.frac.midpoint)
        sink.emit("floor", n=n, floor=fr.floor, frac=frac, precision=fr.precision)
        sink.row(["n", "floor", "frac"], [n, fr.floor, frac])


def run_equi(cfg: dict, sink: Sink) -> None:
    from .equidist import build_intervals, discrepancy, phase, weyl_sum

    a = _expr(cfg["expr"])
    k = _k_for(a, cfg["k"])
    seq = build_intervals(
        a, k, Fraction(cfg["eps"]), cfg["d_k"], cfg["m"], skip_empty=True, case=None if cfg["case"] == "auto" else cfg["case"]
    )
    sink.emit("intervals", case=seq.case, k=k, skipped=list(seq.skipped), lengths_grow=seq.lengths_grow())
    for e in seq.entries:
        w = weyl_sum(a, (e.k_m, e.l_m), 1)
        pts = [phase(a, n) % 1.0 for n in range(e.k_m, min(e.l_m, e.k_m + 4095) + 1)]
        disc, _ = discrepancy(pts)
        sink.emit("interval", m=e.m, k_m=e.k_m, l_m=e.l_m, weyl=w, discrepancy=disc)
        sink.row(["m", "k_m", "l_m", "length", "abs_weyl", "discrepancy"], [e.m, e.k_m, e.l_m, e.length, abs(w), disc])


def run_nil(cfg: dict, sink: Sink) -> None:
    from .expr import parse
    from .nil import HeisenbergElement, TorusPoly, make_schedule, nil_cesaro_average

    try:
        p, q = (int(v) for v in cfg["char"].split(","))
    except ValueError:
        raise ConfigError("char must be p,q") from None
    a = HeisenbergElement(cfg["a_m"], _expr(cfg["alpha1"]), _expr(cfg["alpha2"]))
    sched = make_schedule(cfg["M"], cfg["k"], seed=cfg["seed"])
    res = nil_cesaro_average(TorusPoly.character(p, q), a, sched, cfg["k"])
    running = 0j
    for m, v in enumerate(res.per_m, start=1):
        running += v
        sink.emit("m", m=m, N_m=sched.N[m - 1], inner=v, partial=running / m)
        sink.row(["m", "N_m", "abs_inner", "abs_partial"], [m, sched.N[m - 1], abs(v), abs(running / m)])
    sink.emit("final", average=res.average, integral=res.integral, gap=res.gap)


def run_mine(cfg: dict, sink: Sink) -> None:
    from .patterns import mine_patterns

    a = _expr(cfg["expr"])
    rep = mine_patterns(
        a, cfg["r"], cfg["m"], k=cfg["k"], N_try=cfg["n_try"], search_cap=cfg["search_cap"], jobs=cfg["jobs"]
    )
    for c in rep.certificates:
        an = c.anchor
        sink.emit(
            "certificate",
            r=c.r,
            m=c.m,
            k=c.k,
            coefficients=list(c.coefficients),
            N=c.N,
            verified_through=c.verified_through,
            predicted_N=c.predicted_N,
            n_anchor=an.n_anchor,
            eps_achieved=an.eps_achieved,
            derivative_floors=list(an.floors),
            eps=rep.eps[c.m],
        )
        sink.row(["m", "N_m", "n_anchor", "eps_achieved"], [c.m, c.N, an.n_anchor, float(an.eps_achieved)])
    for m, reason in rep.failures:
        sink.emit("not_found", m=m, reason=reason)
    sink.emit("summary", k=rep.k, certificates=len(rep.certificates), failures=len(rep.failures), trend_up=rep.trend_up)


def run_pet(cfg: dict, sink: Sink) -> None:
    from .pet import family_from_strings, reduce_to_linear

    try:
        fam = family_from_strings([s for s in cfg["family"].split(",") if s.strip()])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    trace = reduce_to_linear(fam, cfg["max_steps"])
    for i, f in enumerate(trace.families):
        sink.emit("family", step=i, **f.to_json())
        sink.row(["step", "type", "size", "parameters"], [i, " ".join(map(str, f.to_json()["type"])), len(f.members), f.r])
    sink.emit("trace", s=trace.s, r_tilde=trace.r_tilde, types=[list(t) for t in trace.types])
    sink.text = trace.text()


def _lambda(cfg: dict):
    from .recurrence import FiniteSet, rotation_set

    N = cfg["window"]
    src = cfg["source"]
    if src == "congruence":
        return FiniteSet.congruence(N, cfg["modulus"], cfg["residues"])
    if src == "rotation":
        return rotation_set(N, cfg["alpha"], [tuple(Fraction(v) for v in cfg["box"])])
    if src == "random":
        return FiniteSet.random(N, float(Fraction(cfg["density"])), cfg["seed"])
    if cfg["file"] is None:
        raise ConfigError("source=file needs --file")
    return FiniteSet.from_file(cfg["file"], N)


def _seq_spec(text: str):
    if text == "factorial":
        return ("factorial",)
    if text.startswith("linear:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("linear sequences are linear:ALPHA:C")
        return ("linear", parts[1], Fraction(parts[2]))
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot read sequence {text!r}") from None


def run_recur(cfg: dict, sink: Sink) -> None:
    from .recurrence import find_progressions, sequence_values

    lam = _lambda(cfg)
    S = sequence_values(_seq_spec(cfg["seq"]), cfg["n_cap"], cfg["window"])
    rep = find_progressions(lam, S, cfg["ell"], first_per_s=True)
    hit = 0
    for s in S:
        c = rep.counts.get(s, 0)
        hit += c > 0
        sink.row(["s", "witnesses"], [s, c])
    first = {s: m for m, s in rep.witnesses}
    sink.emit("lambda", window=lam.N, density=lam.density, source=cfg["source"])
    sink.emit("witnesses", first_per_s={str(s): m for s, m in sorted(first.items())})
    sink.emit("summary", tested=len(S), with_witness=hit, fraction=hit / len(S) if S else 0.0, ell=cfg["ell"])


RUNNERS = {"seq": run_seq, "equi": run_equi, "nil": run_nil, "mine": run_mine, "pet": run_pet, "recur": run_recur}


def run(cfg: dict) -> int:
    """Execute a validated config; returns the exit status."""
    sink = Sink(cfg)
    try:
        RUNNERS[cfg["command"]](cfg, sink)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # any computation failure becomes a structured record
        sink.emit("error", kind=type(exc).__name__, message=str(exc))
        sink.write(cfg["out"])
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    sink.write(cfg["out"])
    return 0


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    file_cfg = {}
    try:
        if args.config:
            try:
                with open(args.config) as fh:
                    file_cfg = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config file: {exc}") from None
            if not isinstance(file_cfg, dict):
                raise ConfigError("config file must hold a JSON object")
        cfg = resolve_config(args.command, file_cfg, flags)
        if cfg.get("expr"):
            _expr(cfg["expr"])  # validate before any computation
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
