"""CPLEX LP text format: writer plus a reader for the subset the writer emits."""
from __future__ import annotations

import math
import re

from .model import LinearExpr, MilpModel, ModelError, Sense, VarKind

_RESERVED = {"st", "s.t.", "subject", "to", "bounds", "bound", "binaries", "binary", "bin", "generals",
             "general", "end", "free", "inf", "infinity", "maximize", "minimize", "max", "min"}
_TERMS_PER_LINE = 6
_CONST_VAR = "obj_constant"


def sanitize_name(name: str) -> str:
    s = re.sub(r"[^A-Za-z0-9_]", "_", name)
    if not s or s[0].isdigit() or re.match(r"[eE]\d", s):
        s = "v" + s
    if s.lower() in _RESERVED:
        s += "_"
    return s


def _unique_names(raw: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for r in raw:
        s = sanitize_name(r)
        base, k = s, seen.get(s, 0)
        while s in seen:
            k += 1
            s = f"{base}_{k}"
        seen[base] = k
        seen[s] = 0
        out.append(s)
    return out


def _num(v: float) -> str:
    if v == 0:
        v = 0.0  # no "-0"
    return format(v, ".17g")


def _chunks(expr: LinearExpr, names: list[str]) -> list[str]:
    return [f"{'-' if c < 0 else '+'} {_num(abs(c))} {names[i]}" for i, c in sorted(expr.terms.items())]


def _lines(chunks: list[str]) -> list[str]:
    return [" ".join(chunks[k:k + _TERMS_PER_LINE]) for k in range(0, len(chunks), _TERMS_PER_LINE)]


def _bound_line(nm: str, lo: float, hi: float) -> str:
    if lo == hi:
        return f" {nm} = {_num(lo)}"
    if lo == -math.inf and hi == math.inf:
        return f" {nm} free"
    if lo == -math.inf:
        return f" -inf <= {nm} <= {_num(hi)}"
    if hi == math.inf:
        return f" {nm} >= {_num(lo)}"
    return f" {_num(lo)} <= {nm} <= {_num(hi)}"


def export_lp_file(model: MilpModel) -> str:
    """Render ``model`` as CPLEX LP text.

    Every variable gets an explicit line under ``Bounds`` so that reading the
    file back preserves variable order and re-exporting reproduces the text.
    An objective constant is carried by an extra variable fixed at 1.
    """
    names = _unique_names([v.name for v in model.variables])
    rownames = _unique_names([c.name for c in model.constraints])
    obj = model.objective
    chunks = _chunks(obj, names)
    const_name = None
    if obj.constant != 0.0 or not names:
        const_name = _unique_names(names + [_CONST_VAR])[-1]
        chunks.append(f"+ {_num(obj.constant)} {const_name}")
    elif not chunks:
        chunks = [f"+ 0 {names[0]}"]
    out = [f"\\ Problem name: {sanitize_name(model.name)}", "Maximize" if model.maximize else "Minimize"]
    body = _lines(chunks)
    out.append(" obj: " + body[0])
    out.extend("   " + ln for ln in body[1:])

    out.append("Subject To")
    ops = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}
    for rn, con in zip(rownames, model.constraints):
        body = _lines(_chunks(con.expr, names)) or [f"+ 0 {names[0]}"]
        out.append(f" {rn}: " + body[0])
        out.extend("   " + ln for ln in body[1:])
        out.append(f"   {ops[con.sense]} {_num(con.rhs)}")

    out.append("Bounds")
    bins = []
    for nm, v in zip(names, model.variables):
        if v.kind is VarKind.BINARY:
            bins.append(nm)
        out.append(_bound_line(nm, v.lower, v.upper))
    if const_name:
        out.append(f" {const_name} = 1")
    if bins:
        out.append("Binaries")
        for k in range(0, len(bins), 8):
            out.append(" " + " ".join(bins[k:k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


# -- reader -----------------------------------------------------------------

_SECTIONS = {
    "maximize": "obj", "maximise": "obj", "max": "obj", "minimize": "obj", "minimise": "obj", "min": "obj",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "end": "end",
}
_TOKEN = re.compile(r"\s*(<=|>=|=<|=>|=|[+-]|[A-Za-z_][A-Za-z0-9_.]*|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|:)")


def _tokens(s: str) -> list[str]:
    pos, out = 0, []
    s = s.rstrip()
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m:
            raise ModelError(f"LP parse error near {s[pos:pos + 20]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def _is_num(t: str) -> bool:
    try:
        float(t)
        return True
    except ValueError:
        return t.lower() in ("inf", "infinity")


def _linear(tokens: list[str], var) -> LinearExpr:
    e = LinearExpr()
    sign, coef = 1.0, None
    for t in tokens:
        if t in "+-":
            sign = -1.0 if t == "-" else 1.0
        elif _is_num(t):
            coef = float(t)
        else:
            e.iadd(var(t), sign * (1.0 if coef is None else coef))
            sign, coef = 1.0, None
    if coef is not None:
        e.iadd(sign * coef)
    return e


def parse_lp_file(text: str) -> MilpModel:
    """Read an LP file produced by :func:`export_lp_file` (and similar simple files)."""
    name = "parsed"
    for ln in text.splitlines():
        m = re.match(r"\\\s*Problem name:\s*(\S+)", ln.strip())
        if m:
            name = m.group(1)
            break
    lines = [ln.split("\\", 1)[0] for ln in text.splitlines()]
    model = MilpModel(name)
    bounds: dict[str, list[float]] = {}
    kinds: dict[str, VarKind] = {}
    order: list[str] = []
    buf: dict[str, list[str]] = {"obj": [], "st": [], "bounds": [], "bin": []}
    section = None
    maximize = True
    for ln in lines:
        key = ln.strip().lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "obj":
                maximize = key.startswith("max")
            continue
        if section and section != "end" and ln.strip():
            buf[section].append(ln.strip())

    def touch(nm):
        if nm not in bounds:
            bounds[nm] = [0.0, math.inf]
            order.append(nm)
        return nm

    for ln in buf["bounds"]:
        for t in _tokens(ln):
            if not _is_num(t) and t not in ("<=", ">=", "=<", "=>", "=", "+", "-") and t.lower() != "free":
                touch(t)
    for ln in buf["bin"]:
        for nm in ln.split():
            touch(nm)
    # objective
    obj_tokens = _tokens(" ".join(buf["obj"]))
    if len(obj_tokens) > 1 and obj_tokens[1] == ":":
        obj_tokens = obj_tokens[2:]
    # constraints: split on "name:" and relation operators
    con_specs = []
    cur: list[str] = []
    for t in _tokens(" ".join(buf["st"])):
        cur.append(t)
    i = 0
    while i < len(cur):
        name = None
        if i + 1 < len(cur) and cur[i + 1] == ":":
            name = cur[i]
            i += 2
        lhs = []
        while cur[i] not in ("<=", ">=", "=", "=<", "=>"):
            lhs.append(cur[i])
            i += 1
        op = cur[i]
        i += 1
        rhs = []
        if cur[i] in "+-":
            rhs.append(cur[i])
            i += 1
        rhs.append(cur[i])
        i += 1
        con_specs.append((name, lhs, op, rhs))
    for t in obj_tokens:
        if not _is_num(t) and t not in "+-":
            touch(t)
    for _, lhs, _, _ in con_specs:
        for t in lhs:
            if not _is_num(t) and t not in "+-":
                touch(t)
    for ln in buf["bounds"]:
        tk = _tokens(ln)
        val = float
        signed = []
        j = 0
        while j < len(tk):  # fold signs into numbers
            if tk[j] in "+-" and j + 1 < len(tk) and _is_num(tk[j + 1]):
                signed.append(("-" if tk[j] == "-" else "") + tk[j + 1])
                j += 2
            else:
                signed.append(tk[j])
                j += 1
        if len(signed) == 2 and signed[1].lower() == "free":
            bounds[touch(signed[0])] = [-math.inf, math.inf]
        elif len(signed) == 3 and signed[1] == "=":
            v = val(signed[2])
            bounds[touch(signed[0])] = [v, v]
        elif len(signed) == 3 and signed[1] in (">=", "=>"):
            bounds[touch(signed[0])][0] = val(signed[2])
        elif len(signed) == 3 and signed[1] in ("<=", "=<"):
            bounds[touch(signed[0])][1] = val(signed[2])
        elif len(signed) == 5:
            nm = touch(signed[2])
            bounds[nm] = [val(signed[0]), val(signed[4])]
        else:
            raise ModelError(f"cannot parse bound line {ln!r}")
    explicit = set()
    for ln in buf["bounds"]:
        explicit.update(t for t in _tokens(ln) if not _is_num(t) and t not in ("<=", ">=", "=<", "=>", "=", "+", "-")
                        and t.lower() != "free")
    for ln in buf["bin"]:
        for nm in ln.split():
            touch(nm)
            kinds[nm] = VarKind.BINARY
            if nm not in explicit:
                bounds[nm] = [0.0, 1.0]
    handles = {}
    for nm in order:
        lo, hi = bounds[nm]
        handles[nm] = model.add_variable(nm, lo, hi, kinds.get(nm, VarKind.CONTINUOUS))
    var = handles.__getitem__
    model.set_objective(_linear(obj_tokens, var), maximize=maximize)
    ops = {"<=": "<=", "=<": "<=", ">=": ">=", "=>": ">=", "=": "=="}
    for name, lhs, op, rhs in con_specs:
        r = float("".join(rhs))
        model.add_constraint(_linear(lhs, var), ops[op], r, name=name)
    return model
