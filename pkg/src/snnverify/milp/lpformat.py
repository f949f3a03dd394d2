"""CPLEX LP text format (write and a compatible read) and solution files.

The writer emits the classic sections Minimize/Maximize, Subject To,
Bounds, Generals, Binaries, End with semantic variable names, so exported
models load into any standard MILP solver.  The reader accepts the subset
the writer produces (plus `free` and infinite bounds, which are clamped to
+-1e12 because this solver requires finite bounds).

Solution files are one `name value` pair per line; `#` starts a comment.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Optional, Union

from ..model import ParseError
from .model import (
    LinearConstraint,
    MilpModel,
    Relation,
    SolveResult,
    SolveStatus,
    UnknownVariable,
    VarKind,
    Variable,
)

PathLike = Union[str, Path]

BIG_BOUND = 1e12


def _num(v: float) -> str:
    return f"{v:.17g}"


def _terms(coeffs, names) -> str:
    parts: list[str] = []
    for vid, c in coeffs:
        if not parts:
            parts.append(f"{_num(c)} {names[vid]}" if c >= 0 else f"- {_num(-c)} {names[vid]}")
        elif c >= 0:
            parts.append(f"+ {_num(c)} {names[vid]}")
        else:
            parts.append(f"- {_num(-c)} {names[vid]}")
    return " ".join(parts)


def format_lp(model: MilpModel) -> str:
    names = model.names()
    out: list[str] = [f"\\ {model.name}"]
    out.append("Maximize" if model.maximize else "Minimize")
    obj = model.objective or []
    out.append(f" obj: {_terms(obj, names)}".rstrip())
    out.append("Subject To")
    for i, con in enumerate(model.constraints):
        label = con.name or f"c{i}"
        rel = {Relation.LE: "<=", Relation.GE: ">=", Relation.EQ: "="}[con.relation]
        out.append(f" {label}: {_terms(con.coeffs, names)} {rel} {_num(con.rhs)}")
    out.append("Bounds")
    for v in model.variables:
        if v.kind is VarKind.BINARY:
            continue
        if v.lower == v.upper:
            out.append(f" {v.name} = {_num(v.lower)}")
        else:
            out.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
    generals = [v.name for v in model.variables if v.kind is VarKind.INTEGER]
    if generals:
        out.append("Generals")
        out.extend(f" {n}" for n in generals)
    binaries = [v.name for v in model.variables if v.kind is VarKind.BINARY]
    if binaries:
        out.append("Binaries")
        out.extend(f" {n}" for n in binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(model: MilpModel, path: PathLike) -> None:
    Path(path).write_text(format_lp(model))


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""(?P<rel><=|>=|=<|=>|<|>|=)
      | (?P<colon>:)
      | (?P<sign>[+-])
      | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z0-9_.\[\]()]*)
    """,
    re.VERBOSE,
)

_SECTIONS = {
    "minimize": "obj-min",
    "minimum": "obj-min",
    "min": "obj-min",
    "maximize": "obj-max",
    "maximum": "obj-max",
    "max": "obj-max",
    "subject to": "st",
    "such that": "st",
    "st": "st",
    "s.t.": "st",
    "bounds": "bounds",
    "bound": "bounds",
    "generals": "gen",
    "general": "gen",
    "gen": "gen",
    "integers": "gen",
    "integer": "gen",
    "binaries": "bin",
    "binary": "bin",
    "bin": "bin",
    "end": "end",
}

_SECTION_KEYS = sorted(_SECTIONS, key=len, reverse=True)


def _tokenise(text: str):
    """Yield (kind, token) pairs; lines are separated by ('eol', '')."""
    for line in text.splitlines():
        line = line.split("\\", 1)[0]
        stripped = line.strip().lower()
        for kw in _SECTION_KEYS:
            if stripped == kw:
                yield ("section", _SECTIONS[kw])
                line = ""
                break
        pos = 0
        for m in _TOKEN.finditer(line):
            if line[pos : m.start()].strip():
                raise ParseError(f"lp: cannot tokenise {line[pos:m.start()]!r}")
            pos = m.end()
            kind = m.lastgroup
            tok = m.group()
            if kind == "rel":
                tok = {"=<": "<=", "=>": ">=", "<": "<=", ">": ">="}.get(tok, tok)
            yield (kind, tok)
        if line[pos:].strip():
            raise ParseError(f"lp: cannot tokenise {line[pos:]!r}")
        yield ("eol", "")


class _LpBuilder:
    def __init__(self):
        self.ids: dict[str, int] = {}
        self.lo: dict[str, float] = {}
        self.hi: dict[str, float] = {}
        self.kind: dict[str, VarKind] = {}

    def var(self, name: str) -> int:
        if name not in self.ids:
            self.ids[name] = len(self.ids)
            self.lo[name] = 0.0
            self.hi[name] = BIG_BOUND
            self.kind[name] = VarKind.CONTINUOUS
        return self.ids[name]

    def finish(self, constraints, objective, maximize) -> MilpModel:
        m = MilpModel()
        for name, vid in self.ids.items():
            k = self.kind[name]
            lo = max(self.lo[name], -BIG_BOUND)
            hi = min(self.hi[name], BIG_BOUND)
            if k is VarKind.BINARY:
                lo, hi = max(lo, 0.0), min(hi, 1.0)
            m.variables.append(Variable(vid, name, k, lo, hi))
        for coeffs, rel, rhs, label in constraints:
            m.constraints.append(LinearConstraint(coeffs, rel, rhs, label))
        if objective:
            m.objective = objective
        m.maximize = maximize
        return m


def parse_lp(text: str) -> MilpModel:
    """Parse the LP subset produced by format_lp."""
    b = _LpBuilder()
    tokens = list(_tokenise(text))
    n_tok = len(tokens)
    i = 0
    section = None
    maximize = False
    objective: list[tuple[int, float]] = []
    constraints: list = []

    def skip_label(i: int) -> int:
        """Consume `name :` when present (labels precede expressions)."""
        if (
            i < n_tok
            and tokens[i][0] == "name"
            and i + 1 < n_tok
            and tokens[i + 1][0] == "colon"
        ):
            return i + 2
        return i

    def parse_expr(i: int):
        """Read sign/coefficient/name terms until a relation or section."""
        coeffs: list[tuple[int, float]] = []
        const = 0.0
        sign = 1.0
        coeff: Optional[float] = None
        while i < n_tok:
            kind, tok = tokens[i]
            if kind == "eol":
                i += 1
                continue
            if kind in ("rel", "section"):
                break
            if kind == "sign":
                if coeff is not None:
                    const += sign * coeff
                    coeff = None
                sign = -1.0 if tok == "-" else 1.0
            elif kind == "num":
                if coeff is not None:
                    const += sign * coeff
                    sign = 1.0
                coeff = float(tok)
            elif kind == "name":
                # a label for the *next* row ends this expression
                if i + 1 < n_tok and tokens[i + 1][0] == "colon":
                    break
                coeffs.append((b.var(tok), sign * (1.0 if coeff is None else coeff)))
                sign, coeff = 1.0, None
            else:
                raise ParseError(f"lp: unexpected {tok!r} in expression")
            i += 1
        if coeff is not None:
            const += sign * coeff
        return coeffs, const, i

    while i < n_tok:
        kind, tok = tokens[i]
        if kind == "section":
            if tok == "obj-min":
                section, maximize = "obj", False
            elif tok == "obj-max":
                section, maximize = "obj", True
            elif tok == "end":
                break
            else:
                section = tok
            i += 1
            continue
        if kind == "eol":
            i += 1
            continue
        if section == "obj":
            i = skip_label(i)
            coeffs, _, i = parse_expr(i)
            objective.extend(coeffs)
        elif section == "st":
            start = i
            i = skip_label(i)
            label = tokens[start][1] if i != start else ""
            coeffs, const, i = parse_expr(i)
            if i >= n_tok or tokens[i][0] != "rel":
                raise ParseError(f"lp: constraint {label or '<anon>'} lacks a relation")
            rel = {"<=": Relation.LE, ">=": Relation.GE, "=": Relation.EQ}[tokens[i][1]]
            i += 1
            rcoeffs, rconst, i = parse_expr(i)
            if rcoeffs:
                raise ParseError(f"lp: constraint {label or '<anon>'} has variables on the rhs")
            constraints.append((coeffs, rel, rconst - const, label))
        elif section == "bounds":
            line: list[tuple[str, str]] = []
            while i < n_tok and tokens[i][0] != "eol":
                line.append(tokens[i])
                i += 1
            _apply_bound_line(b, line)
        elif section in ("gen", "bin"):
            if kind == "name":
                b.var(tok)
                b.kind[tok] = VarKind.INTEGER if section == "gen" else VarKind.BINARY
            i += 1
        else:
            raise ParseError(f"lp: token {tok!r} outside any section")
    return b.finish(constraints, objective or None, maximize)


def _apply_bound_line(b: _LpBuilder, line: list[tuple[str, str]]) -> None:
    """Forms: lo <= x <= hi | x <= hi | x >= lo | x = v | x free."""
    if not line:
        return
    vals: list[float] = []
    rels: list[str] = []
    name: Optional[str] = None
    free = False
    sign = 1.0
    for kind, tok in line:
        if kind == "sign":
            sign = -1.0 if tok == "-" else 1.0
        elif kind == "num":
            vals.append(sign * float(tok))
            sign = 1.0
        elif kind == "name":
            low = tok.lower()
            if low in ("inf", "infinity"):
                vals.append(sign * BIG_BOUND)
                sign = 1.0
            elif low == "free":
                free = True
            else:
                name = tok
                b.var(name)
        elif kind == "rel":
            rels.append(tok)
        else:
            raise ParseError(f"lp: unexpected {tok!r} in bounds")
    if name is None:
        raise ParseError("lp: bound line names no variable")
    if free:
        b.lo[name], b.hi[name] = -BIG_BOUND, BIG_BOUND
    elif len(rels) == 1 and rels[0] == "=" and len(vals) == 1:
        b.lo[name] = b.hi[name] = vals[0]
    elif len(rels) == 2 and len(vals) == 2:
        b.lo[name], b.hi[name] = vals[0], vals[1]
    elif len(rels) == 1 and len(vals) == 1:
        if rels[0] == "<=":
            b.hi[name] = vals[0]
        else:
            b.lo[name] = vals[0]
    else:
        raise ParseError(f"lp: cannot parse bound line for {name}")


def read_lp(path: PathLike) -> MilpModel:
    model = parse_lp(Path(path).read_text())
    model.name = Path(path).stem
    return model


# ---------------------------------------------------------------------------
# solution files
# ---------------------------------------------------------------------------


def write_solution(model: MilpModel, assignment: dict[int, float], path: PathLike) -> None:
    names = model.names()
    lines = [f"{names[vid]} {_num(val)}" for vid, val in sorted(assignment.items())]
    Path(path).write_text("\n".join(lines) + "\n")


def import_solution(
    model: MilpModel, path: PathLike, feas_tol: float = 1e-6, int_tol: float = 1e-6
) -> SolveResult:
    """Validate an externally produced `name value` assignment file.

    Feasible when every model variable is assigned and all bounds,
    integrality conditions and constraints hold within tolerance;
    Infeasible otherwise with the first violation in ``detail``.
    """
    by_name = model.by_name()
    assignment: dict[int, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'name value'")
        name, sval = parts
        if name not in by_name:
            raise UnknownVariable(f"{path}:{lineno}: unknown variable {name!r}")
        try:
            assignment[by_name[name]] = float(sval)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad value {sval!r}") from exc
    missing = [v.name for v in model.variables if v.id not in assignment]
    if missing:
        raise UnknownVariable(
            f"{path}: no value for {missing[0]!r}"
            + (f" (+{len(missing) - 1} more)" if len(missing) > 1 else "")
        )
    problems = model.check_assignment(assignment, feas_tol=feas_tol, int_tol=int_tol)
    if problems:
        return SolveResult(SolveStatus.INFEASIBLE, detail=problems[0])
    return SolveResult(SolveStatus.FEASIBLE, assignment, model.objective_value(assignment))
