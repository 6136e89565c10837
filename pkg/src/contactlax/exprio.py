"""Parsing, printing and JSON documents for polynomials in p and jets.

Grammar (whitespace-insensitive, explicit ``*``)::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := base ('^' uint)?
    base   := rational | 'p' | name | jet | '(' expr ')'

``rational`` is ``int`` or ``int/int``; a jet is a variable name followed by
``_`` and direction letters in x, y, z, t order, e.g. ``u_xz``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import jsonschema

from .jetalg import P, DiffPolynomial, Jet, PPoly, var
from .systemgen import MATRIX_DIRECTIONS, QuasiLinearSystem

RESERVED = frozenset("pxyzt")
NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
_JET_SUFFIX_RE = re.compile(r"x*y*z*t*\Z")


class ParseError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.message = message
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}" + (f": {text!r}" if text else ""))


class UnknownIdentifierError(ParseError):
    pass


class ExponentError(ParseError):
    pass


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?)|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    toks = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        start = m.start(m.lastgroup)
        toks.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


def validate_variables(variables: Sequence[str]) -> None:
    seen = set()
    for name in variables:
        if not isinstance(name, str) or not NAME_RE.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        if name in RESERVED:
            raise ValueError(f"variable name {name!r} is reserved")
        head, _, tail = name.rpartition("_")
        if head and tail and _JET_SUFFIX_RE.match(tail):
            raise ValueError(f"variable name {name!r} would read as a jet")
        if name in seen:
            raise ValueError(f"duplicate variable name {name!r}")
        seen.add(name)


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.index = {name: i for i, name in enumerate(variables)}
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None, cls=ParseError):
        tok = tok or self.peek()
        return cls(msg, self.text, tok[2])

    def parse(self) -> PPoly:
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self) -> PPoly:
        sign = 1
        if self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            sign = -1 if self.take()[1] == "-" else 1
        out = self.term() * sign
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            out = out + t if op == "+" else out - t
        return out

    def term(self) -> PPoly:
        out = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            out = out * self.factor()
        return out

    def factor(self) -> PPoly:
        b = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.peek()
            if tok[0] == "op" and tok[1] == "-":
                raise self.error("negative exponent", cls=ExponentError)
            if tok[0] != "num":
                raise self.error("exponent must be an unsigned integer", cls=ExponentError)
            self.take()
            if "." in tok[1] or (self.peek()[0] == "op" and self.peek()[1] == "/"):
                raise self.error("non-integer exponent", tok, cls=ExponentError)
            b = b ** int(tok[1])
        return b

    def base(self) -> PPoly:
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            if "." in val:
                raise self.error("decimal literals are not supported; use int/int", tok)
            num = int(val)
            if self.peek()[0] == "op" and self.peek()[1] == "/":
                self.take()
                den = self.take()
                if den[0] != "num" or "." in den[1]:
                    raise self.error("expected integer denominator", den)
                if int(den[1]) == 0:
                    raise self.error("zero denominator", den)
                return PPoly.coerce(Fraction(num, int(den[1])))
            return PPoly.coerce(num)
        if kind == "name":
            if val == "p":
                return P
            if val in self.index:
                return PPoly.coerce(var(self.index[val]))
            if val in RESERVED:
                raise self.error(f"reserved name {val!r} cannot be used as a variable", tok,
                                 UnknownIdentifierError)
            head, _, tail = val.rpartition("_")
            if head in self.index and tail and _JET_SUFFIX_RE.match(tail):
                return PPoly.coerce(var(self.index[head], tail))
            raise self.error(f"unknown identifier {val!r}", tok, UnknownIdentifierError)
        if kind == "op" and val == "(":
            e = self.expr()
            close = self.take()
            if close[1] != ")":
                raise self.error("expected ')'", close)
            return e
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {val!r}", tok)


def parse(text: str, variables: Sequence[str]) -> PPoly:
    """Parse ``text`` into a canonical :class:`PPoly` over ``variables``."""
    return _Parser(text, list(variables)).parse()


def parse_diffpoly(text: str, variables: Sequence[str]) -> DiffPolynomial:
    e = parse(text, variables)
    if e.degree > 0:
        raise ParseError("expected an expression free of p", text, 0)
    return e.coeff(0)


# -- printing ------------------------------------------------------------------


def jet_name(j: Jet, variables: Sequence[str]) -> str:
    s = j.suffix()
    return variables[j.component] + (f"_{s}" if s else "")


def _jet_latex(j: Jet, variables: Sequence[str]) -> str:
    head, _, sub = variables[j.component].partition("_")
    subs = [x for x in (sub, j.suffix()) if x]
    return head + ("_{" + ",".join(subs) + "}" if subs else "")


def _terms(e):
    e = PPoly.coerce(e)
    for k, c in sorted(e.items(), reverse=True):
        for mono, coeff in c.terms:
            yield k, mono, Fraction(coeff)


def _join(pieces) -> str:
    if not pieces:
        return "0"
    out = []
    for i, (neg, body) in enumerate(pieces):
        if i == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


def print_canonical(e, variables: Sequence[str]) -> str:
    """Deterministic plain-text form; ``parse`` inverts it."""
    pieces = []
    for k, mono, c in _terms(e):
        factors = [jet_name(j, variables) + (f"^{x}" if x > 1 else "") for j, x in mono]
        if k:
            factors.append("p" if k == 1 else f"p^{k}")
        a = abs(c)
        if a != 1 or not factors:
            factors.insert(0, str(a))
        pieces.append((c < 0, "*".join(factors)))
    return _join(pieces)


def print_latex(e, variables: Sequence[str]) -> str:
    pieces = []
    for k, mono, c in _terms(e):
        factors = [_jet_latex(j, variables) + (f"^{{{x}}}" if x > 1 else "") for j, x in mono]
        if k:
            factors.append("p" if k == 1 else f"p^{{{k}}}")
        a = abs(c)
        if a != 1 or not factors:
            lit = str(a.numerator) if a.denominator == 1 else f"\\frac{{{a.numerator}}}{{{a.denominator}}}"
            factors.insert(0, lit)
        pieces.append((c < 0, " ".join(factors)))
    return _join(pieces)


def format_system(system: QuasiLinearSystem, latex: bool = False) -> str:
    printer = print_latex if latex else print_canonical
    lines = []
    for o, eq in zip(system.origins, system.equations()):
        lines.append(f"[p^{o}] {printer(eq, system.variables)} = 0")
    return "\n".join(lines)


# -- JSON documents ------------------------------------------------------------------

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["variables", "f", "g"],
    "properties": {
        "variables": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "f": {"type": "string"},
        "g": {"type": "string"},
        "description": {"type": "string"},
        "m": {"type": "integer"},
        "n": {"type": "integer"},
    },
    "additionalProperties": False,
}

_ROW_SCHEMA = {
    "type": "object",
    "required": ["p_power", "A0", "A1", "A2", "A3"],
    "properties": {
        "p_power": {"type": "integer", "minimum": 0},
        **{f"A{k}": {"type": "array", "items": {"type": "string"}} for k in range(4)},
    },
    "additionalProperties": False,
}

SYSTEM_SCHEMA = {
    "type": "object",
    "required": ["variables", "equations"],
    "properties": {
        "variables": {"type": "array", "items": {"type": "string"}},
        "equations": {"type": "array", "items": _ROW_SCHEMA},
        "provenance": {"type": "object", "additionalProperties": {"type": ["string", "integer"]}},
    },
    "additionalProperties": False,
}


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


@dataclass
class ProblemDocument:
    variables: List[str]
    f_text: str
    g_text: str
    description: Optional[str] = None
    m: Optional[int] = None
    n: Optional[int] = None

    def __post_init__(self):
        validate_variables(self.variables)

    @property
    def f(self) -> PPoly:
        return parse(self.f_text, self.variables)

    @property
    def g(self) -> PPoly:
        return parse(self.g_text, self.variables)

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemDocument":
        jsonschema.validate(d, PROBLEM_SCHEMA)
        return cls(list(d["variables"]), d["f"], d["g"], d.get("description"), d.get("m"), d.get("n"))

    @classmethod
    def from_json(cls, text: str) -> "ProblemDocument":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_polys(cls, f, g, variables: Sequence[str], **meta) -> "ProblemDocument":
        return cls(list(variables), print_canonical(f, variables), print_canonical(g, variables), **meta)

    def to_dict(self) -> dict:
        d = {"variables": list(self.variables), "f": self.f_text, "g": self.g_text}
        for key in ("description", "m", "n"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d

    def to_json(self) -> str:
        return dumps(self.to_dict())


@dataclass
class SystemDocument:
    variables: List[str]
    equations: List[dict]
    provenance: dict = field(default_factory=dict)

    @classmethod
    def from_system(cls, system: QuasiLinearSystem, provenance: Optional[dict] = None) -> "SystemDocument":
        rows = []
        for r in range(system.M):
            row = {"p_power": system.origins[r]}
            for k in range(4):
                row[f"A{k}"] = [print_canonical(a, system.variables) for a in system.matrices[k][r]]
            rows.append(row)
        if provenance is None:
            provenance = {}
            for key, val in (system.provenance or {}).items():
                if isinstance(val, PPoly):
                    provenance[key] = print_canonical(val, system.variables)
                elif isinstance(val, (str, int)):
                    provenance[key] = val
        return cls(list(system.variables), rows, provenance)

    def to_system(self) -> QuasiLinearSystem:
        eqs = []
        for row in self.equations:
            e = DiffPolynomial()
            for k, d in enumerate(MATRIX_DIRECTIONS):
                for i, text in enumerate(row[f"A{k}"]):
                    a = parse_diffpoly(text, self.variables)
                    if a.max_order() > 0:
                        raise ValueError("matrix entries must not contain derivative jets")
                    e = e + a * var(i, d)
            eqs.append(e)
        return QuasiLinearSystem.from_equations(
            eqs, self.variables, [row["p_power"] for row in self.equations], drop_zero=False
        )

    def to_dict(self) -> dict:
        d = {"variables": list(self.variables), "equations": self.equations}
        if self.provenance:
            d["provenance"] = dict(self.provenance)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SystemDocument":
        jsonschema.validate(d, SYSTEM_SCHEMA)
        n = len(d["variables"])
        for row in d["equations"]:
            if any(len(row[f"A{k}"]) != n for k in range(4)):
                raise ValueError("each coefficient row must have one entry per variable")
        return cls(list(d["variables"]), list(d["equations"]), dict(d.get("provenance", {})))

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SystemDocument":
        return cls.from_dict(json.loads(text))


def parse_substitution(text: str, variables: Sequence[str]) -> dict:
    """``"w=0,q=(3/2)*u"`` to ``{component: DiffPolynomial}``."""
    out = {}
    index = {name: i for i, name in enumerate(variables)}
    for part in _split_top_level(text):
        name, eq, rhs = part.partition("=")
        name = name.strip()
        if not eq:
            raise ParseError("expected name=expression", part, 0)
        if name not in index:
            raise UnknownIdentifierError(f"unknown variable {name!r}", part, 0)
        out[index[name]] = parse_diffpoly(rhs, variables)
    return out


def _split_top_level(text: str) -> List[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return [p for p in parts if p.strip()]
