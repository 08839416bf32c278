"""Plain-text LP format and JSON Lines iterate traces.

LP grammar, one statement per line (``#`` starts a comment)::

    problem    := objective constraint+ bounds*
    objective  := ("min" | "max") linexpr
    constraint := "st" linexpr ("<=" | ">=" | "=") [+|-] number
    bounds     := "free" ident
    linexpr    := [+|-] term (("+" | "-") term)*
    term       := number [ident] | ident

Variables are numbered in order of first appearance.  Bare numbers in an
expression are constants: in the objective they become ``offset``, in a
constraint they move to the right-hand side.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

from .errors import InputError
from .model import Constraint, LpProblem, TraceRecord

TRACE_SCHEMA = "gabplp-trace/1"
TRACE_FIELDS = ("iter", "newton", "x", "obj", "mu", "lambda2", "step", "gabp_rounds", "gabp_converged")

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<rel><=|>=|=)
  | (?P<op>[+-])
""", re.VERBOSE)
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ParseError(InputError):
    """Input outside the LP grammar, with a 1-based line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise ParseError(f"unknown token {line[pos]!r}", lineno, pos + 1)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return toks


class _Line:
    def __init__(self, toks, lineno, length):
        self.toks = toks
        self.i = 0
        self.lineno = lineno
        self.end_col = length + 1

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        col = tok.col if tok is not None else self.end_col
        raise ParseError(message, self.lineno, col)

    def number(self, tok) -> float:
        value = float(tok.text)
        if not math.isfinite(value):
            self.fail(f"number {tok.text} is out of range", tok)
        return value


def _linexpr(ln: _Line, register) -> tuple[dict[int, float], float]:
    coeffs: dict[int, float] = {}
    const = 0.0
    sign = 1.0
    tok = ln.peek()
    if tok is not None and tok.kind == "op":
        ln.take()
        sign = -1.0 if tok.text == "-" else 1.0
    while True:
        tok = ln.take()
        if tok is None:
            ln.fail("expected a term")
        if tok.kind == "num":
            value = ln.number(tok)
            nxt = ln.peek()
            if nxt is not None and nxt.kind == "ident":
                ln.take()
                j = register(nxt.text)
                coeffs[j] = coeffs.get(j, 0.0) + sign * value
            else:
                const += sign * value
        elif tok.kind == "ident":
            j = register(tok.text)
            coeffs[j] = coeffs.get(j, 0.0) + sign
        else:
            ln.fail(f"expected a term, got {tok.text!r}", tok)
        nxt = ln.peek()
        if nxt is None or nxt.kind != "op":
            return coeffs, const
        ln.take()
        sign = -1.0 if nxt.text == "-" else 1.0


def parse_lp(text) -> LpProblem:
    """Parse LP text (``str`` or UTF-8 ``bytes``) into an :class:`LpProblem`."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            head = bytes(text[:exc.start]).decode("utf-8", errors="replace")
            line = head.count("\n") + 1
            raise ParseError("input is not valid UTF-8", line, len(head) - head.rfind("\n")) from None

    names: list[str] = []
    index: dict[str, int] = {}

    def register(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    sense = None
    objective: dict[int, float] = {}
    offset = 0.0
    rows: list[tuple[dict[int, float], str, float]] = []
    free: set[int] = set()
    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0]
        toks = _tokenize(body, lineno)
        if not toks:
            continue
        ln = _Line(toks, lineno, len(body))
        head = ln.take()
        word = head.text if head.kind == "ident" else None
        if word in ("min", "max"):
            if sense is not None:
                ln.fail("duplicate objective", head)
            sense = word
            objective, offset = _linexpr(ln, register)
        elif word == "st":
            if sense is None:
                ln.fail("constraint before objective", head)
            coeffs, const = _linexpr(ln, register)
            rel = ln.take()
            if rel is None or rel.kind != "rel":
                ln.fail("expected <=, >= or =", rel)
            sign = 1.0
            tok = ln.take()
            if tok is not None and tok.kind == "op":
                sign = -1.0 if tok.text == "-" else 1.0
                tok = ln.take()
            if tok is None or tok.kind != "num":
                ln.fail("expected a number on the right-hand side", tok)
            rows.append((coeffs, rel.text, sign * ln.number(tok) - const))
        elif word == "free":
            if sense is None:
                ln.fail("bounds before objective", head)
            tok = ln.take()
            if tok is None or tok.kind != "ident":
                ln.fail("expected a variable name after free", tok)
            free.add(register(tok.text))
        else:
            ln.fail(f"unknown statement {head.text!r}", head)
        extra = ln.peek()
        if extra is not None:
            ln.fail(f"unexpected {extra.text!r}", extra)

    last = len(lines)
    if sense is None:
        raise ParseError("empty problem: no objective", last, 1)
    if not rows:
        raise ParseError("empty problem: no constraints", last, 1)
    n = len(names)

    def dense(coeffs):
        return tuple(coeffs.get(j, 0.0) for j in range(n))

    try:
        return LpProblem(tuple(names), sense, dense(objective),
                         tuple(Constraint(dense(c), rel, rhs) for c, rel, rhs in rows),
                         tuple(j not in free for j in range(n)), offset)
    except InputError as exc:
        raise ParseError(str(exc), last, 1) from None


def _term(coef: float, name: str, first: bool) -> str:
    neg = math.copysign(1.0, coef) < 0
    mag = repr(abs(coef))
    if first:
        return f"-{mag} {name}" if neg else f"{mag} {name}"
    return f"{'-' if neg else '+'} {mag} {name}"


def emit_lp(problem: LpProblem) -> str:
    """Text that :func:`parse_lp` maps back to an equal problem."""
    for name in problem.names:
        if not _IDENT.match(name):
            raise InputError(f"variable name {name!r} is not an identifier")
    names = problem.names
    # every variable appears in the objective so the order is reproduced
    parts = [_term(c, v, k == 0) for k, (c, v) in enumerate(zip(problem.objective, names))]
    if problem.offset != 0.0 or not names:
        mag = repr(abs(problem.offset))
        neg = math.copysign(1.0, problem.offset) < 0
        parts.append(("-" if neg else "") + mag if not parts else f"{'-' if neg else '+'} {mag}")
    out = [f"{problem.sense} " + " ".join(parts)]
    for con in problem.constraints:
        terms = [(c, v) for c, v in zip(con.coefficients, names) if c != 0.0]
        if terms:
            lhs = " ".join(_term(c, v, k == 0) for k, (c, v) in enumerate(terms))
        else:
            lhs = f"0.0 {names[0]}" if names else "0.0"
        out.append(f"st {lhs} {con.relation} {con.rhs!r}")
    out.extend(f"free {v}" for v, nn in zip(names, problem.nonneg) if not nn)
    return "\n".join(out) + "\n"


def build_toy_problem() -> LpProblem:
    """max x1 + x2  s.t.  2p x1 + x2 <= p^2 + 1  for p = 0, 0.1, ..., 1."""
    rows = []
    for k in range(11):
        p = k / 10
        rows.append(Constraint((2 * p, 1.0), "<=", p * p + 1))
    return LpProblem(("x1", "x2"), "max", (1.0, 1.0), tuple(rows))


class TraceFormatError(InputError):
    def __init__(self, message: str, line: int):
        super().__init__(f"trace line {line}: {message}")
        self.line = line


def write_trace(trace) -> str:
    """One JSON object per record; floats use shortest round-trip form."""
    lines = []
    for r in trace:
        rec = {"schema": TRACE_SCHEMA, "iter": r.outer, "newton": r.newton, "x": list(r.x),
               "obj": r.objective, "mu": r.mu, "lambda2": r.lambda2, "step": r.step,
               "gabp_rounds": r.gabp_rounds, "gabp_converged": r.gabp_converged}
        lines.append(json.dumps(rec))
    return "".join(line + "\n" for line in lines)


def read_trace(text: str) -> list[TraceRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except ValueError as exc:
            raise TraceFormatError(f"not valid JSON ({exc})", lineno) from None
        if not isinstance(rec, dict) or rec.get("schema") != TRACE_SCHEMA:
            raise TraceFormatError(f"missing or unknown schema tag (want {TRACE_SCHEMA})", lineno)
        missing = [f for f in TRACE_FIELDS if f not in rec]
        if missing:
            raise TraceFormatError(f"missing fields {missing}", lineno)
        try:
            out.append(TraceRecord(int(rec["iter"]), int(rec["newton"]), tuple(float(v) for v in rec["x"]),
                                   float(rec["obj"]), float(rec["mu"]), float(rec["lambda2"]),
                                   float(rec["step"]), int(rec["gabp_rounds"]),
                                   bool(rec["gabp_converged"])))
        except (TypeError, ValueError) as exc:
            raise TraceFormatError(f"bad field value ({exc})", lineno) from None
    return out
