"""Reader and writer for the CPLEX LP text format.

The writer is deterministic: every variable appears in the Bounds section
in index order, numbers use the shortest round-tripping representation and
long rows wrap at a fixed width.  Reading a written file and writing it
again reproduces the same bytes.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Union

from .model import EQ, GE, LE, MAXIMIZE, MINIMIZE, LinExpr, MilpModel, ModelError

WRAP = 240

_NAME_CHARS = r"A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~\[\]"
_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<op><=|>=|=<|=>|<|>|=|\+|-|:)"
    rf"|(?P<name>[A-Za-z_!\"#$%&()/,.;?@`'{{}}|~\[\]][{_NAME_CHARS}]*)"
    r")"
)
_SECTIONS = [
    (re.compile(r"^(maximize|maximise|maximum|max)$", re.I), "max"),
    (re.compile(r"^(minimize|minimise|minimum|min)$", re.I), "min"),
    (re.compile(r"^(subject\s+to|such\s+that|st|s\.t\.)$", re.I), "st"),
    (re.compile(r"^(bounds|bound)$", re.I), "bounds"),
    (re.compile(r"^(binaries|binary|bin)$", re.I), "bin"),
    (re.compile(r"^(generals|general|gen)$", re.I), "gen"),
    (re.compile(r"^end$", re.I), "end"),
]


def fmt_num(x: float) -> str:
    x = float(x)
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _terms(coefs: dict, names: list) -> list:
    out = []
    for i in sorted(coefs):
        c = coefs[i]
        if c == 0.0:
            continue
        sign = "-" if c < 0 else "+"
        out.append(f"{sign} {fmt_num(abs(c))} {names[i]}")
    return out


def _wrap(head: str, pieces: list) -> list:
    lines, cur = [], head
    for p in pieces:
        if len(cur) + 1 + len(p) > WRAP and cur.strip():
            lines.append(cur)
            cur = "  " + p
        else:
            cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def write_lp(model: MilpModel) -> str:
    names = [v.name for v in model.vars]
    lines = [f"\\ Problem: {model.name}"]
    lines.append("Maximize" if model.sense == MAXIMIZE else "Minimize")
    obj = _terms(model.objective.coefs, names)
    if model.objective.const != 0.0:
        c = model.objective.const
        obj.append(f"{'-' if c < 0 else '+'} {fmt_num(abs(c))}")
    lines += _wrap(" obj:", obj)
    lines.append("Subject To")
    for con in model.constraints:
        pieces = _terms(con.coefs, names) + [con.sense, fmt_num(con.rhs)]
        lines += _wrap(f" {con.name}:", pieces)
    lines.append("Bounds")
    for v in model.vars:
        if v.lb == v.ub:
            lines.append(f" {v.name} = {fmt_num(v.lb)}")
        elif math.isinf(v.lb) and math.isinf(v.ub):
            lines.append(f" {v.name} free")
        elif math.isinf(v.ub):
            lines.append(f" {v.name} >= {fmt_num(v.lb)}")
        else:
            lines.append(f" {fmt_num(v.lb)} <= {v.name} <= {fmt_num(v.ub)}")
    bins = [v.name for v in model.vars if v.boolean]
    if bins:
        lines.append("Binaries")
        lines += _wrap("", bins)
    lines.append("End")
    return "\n".join(lines) + "\n"


def save_lp(model: MilpModel, path: Union[str, Path]) -> None:
    Path(path).write_text(write_lp(model), encoding="utf-8", newline="\n")


# -- parsing ----------------------------------------------------------------


def _tokenize(text: str) -> list:
    toks, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise ModelError(f"cannot tokenize LP text near {text[pos:pos + 20]!r}")
        pos = mt.end()
        kind = mt.lastgroup
        val = mt.group(kind)
        if kind == "name" and val.lower() in ("inf", "infinity"):
            kind, val = "num", "inf"
        toks.append((kind, val))
    return toks


class _Stream:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else (None, None)

    def next(self):
        t = self.peek()
        self.i += 1
        return t

    def done(self):
        return self.i >= len(self.toks)


def _read_label(s: _Stream):
    if s.peek()[0] == "name" and s.peek(1) == ("op", ":"):
        name = s.next()[1]
        s.next()
        return name
    return None


def _read_expr(s: _Stream, stop_at_sense: bool):
    """Read signed terms; returns (list of (coef, name or None))."""
    terms = []
    while not s.done():
        kind, val = s.peek()
        if kind == "op" and val in ("<=", ">=", "=<", "=>", "<", ">", "="):
            break
        if kind == "name" and s.peek(1) == ("op", ":"):
            break
        sign = 1.0
        while s.peek()[0] == "op" and s.peek()[1] in "+-":
            if s.next()[1] == "-":
                sign = -sign
        kind, val = s.peek()
        coef = 1.0
        if kind == "num":
            coef = float(val)
            s.next()
            kind, val = s.peek()
            if kind == "name" and s.peek(1) != ("op", ":"):
                s.next()
                terms.append((sign * coef, val))
            else:
                terms.append((sign * coef, None))
        elif kind == "name":
            s.next()
            terms.append((sign, val))
        else:
            raise ModelError(f"unexpected token {val!r} in expression")
    return terms


def _read_number(s: _Stream) -> float:
    sign = 1.0
    while s.peek()[0] == "op" and s.peek()[1] in "+-":
        if s.next()[1] == "-":
            sign = -sign
    kind, val = s.next()
    if kind != "num":
        raise ModelError(f"expected a number, got {val!r}")
    return sign * float(val)


_SENSE_MAP = {"<=": LE, "=<": LE, "<": LE, ">=": GE, "=>": GE, ">": GE, "=": EQ}


def parse_lp(text: str) -> MilpModel:
    sections = {"max": [], "min": [], "st": [], "bounds": [], "bin": [], "gen": []}
    name = "model"
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            mt = re.match(r"\\\s*Problem:\s*(.*)$", line)
            if mt:
                name = mt.group(1).strip()
            continue
        line = line.split("\\", 1)[0].strip()
        if not line:
            continue
        hit = next((tag for rx, tag in _SECTIONS if rx.match(line)), None)
        if hit == "end":
            break
        if hit:
            current = hit
            continue
        if current is None:
            raise ModelError(f"LP text before any section header: {line!r}")
        sections[current].append(line)
    if sections["gen"]:
        raise ModelError("general integer variables are not supported")
    if sections["max"] and sections["min"]:
        raise ModelError("LP file has both Maximize and Minimize sections")

    m = MilpModel(name)
    bound_specs = []
    for line in sections["bounds"]:
        toks = _tokenize(line)
        if len(toks) == 2 and toks[1][1].lower() == "free":
            bound_specs.append((toks[0][1], -math.inf, math.inf))
            continue
        s = _Stream(toks)
        if s.peek()[0] == "name":
            vname = s.next()[1]
            op = _SENSE_MAP[s.next()[1]]
            val = _read_number(s)
            lb, ub = {EQ: (val, val), GE: (val, math.inf), LE: (0.0, val)}[op]
        else:
            lb = _read_number(s)
            if _SENSE_MAP[s.next()[1]] != LE:
                raise ModelError(f"unsupported bound line {line!r}")
            vname = s.next()[1]
            ub = math.inf
            if not s.done():
                s.next()
                ub = _read_number(s)
        bound_specs.append((vname, lb, ub))

    bins = set()
    for line in sections["bin"]:
        bins.update(line.split())
    declared = set()
    for vname, lb, ub in bound_specs:
        m.add_var(vname, lb=lb, ub=ub, boolean=vname in bins)
        declared.add(vname)

    def ensure(vname):
        if vname not in declared:
            m.add_var(vname, lb=0.0, ub=1.0 if vname in bins else math.inf, boolean=vname in bins)
            declared.add(vname)
        return m.by_name(vname)

    obj_lines = sections["max"] or sections["min"]
    s = _Stream(_tokenize(" ".join(obj_lines)))
    _read_label(s)
    obj = LinExpr()
    for coef, vname in _read_expr(s, False):
        obj.iadd(ensure(vname) if vname else 1.0, coef)

    s = _Stream(_tokenize(" ".join(sections["st"])))
    cons = []
    while not s.done():
        label = _read_label(s)
        terms = _read_expr(s, True)
        sense = _SENSE_MAP[s.next()[1]]
        rhs = _read_number(s)
        cons.append((label, terms, sense, rhs))
    for label, terms, sense, rhs in cons:
        e = LinExpr()
        for coef, vname in terms:
            e.iadd(ensure(vname) if vname else 1.0, coef)
        family = label.split(".", 1)[0] if label else "c"
        m.add_constraint(e, sense, rhs, name=label, family=family)
    for b in bins:
        ensure(b)
    m.set_objective(obj, MAXIMIZE if sections["max"] else MINIMIZE)
    return m


def load_lp(path: Union[str, Path]) -> MilpModel:
    return parse_lp(Path(path).read_text(encoding="utf-8"))
