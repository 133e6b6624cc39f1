"""Expression parsing, the JSON system format, and deterministic report output.

Expression grammar::

    expr    := ['+'|'-'] term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := base ('^' integer)?
    base    := identifier | integer | '(' expr ')'

A rational literal ``p/q`` is simply a quotient of integer bases.
"""

from __future__ import annotations

import dataclasses
import json
import re
from fractions import Fraction
from typing import Any, Sequence

from .poly import Polynomial, format_rational
from .ratfunc import RationalFunction
from .sysmodel import Assumptions, Parametrization, RationalSystem, Variety, VarietyError, Violation, validate_system

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"[0-9]+")


class ParseError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}" + (f" in {text!r}" if text else ""))
        self.position = position
        self.text = text


class SpecError(ValueError):
    """A system document could not be turned into a valid system.

    ``kind`` is one of ``json``, ``schema``, ``parse`` or ``validation``.
    """

    def __init__(self, kind: str, message: str, violations: Sequence[Violation] = ()):
        super().__init__(message)
        self.kind = kind
        self.violations = list(violations)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(("id", m.group(), i))
            i = m.end()
            continue
        m = _INT.match(text, i)
        if m:
            tokens.append(("int", m.group(), i))
            i = m.end()
            continue
        if ch in "+-*/^()":
            tokens.append((ch, ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i, text)
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.index = {name: i for i, name in enumerate(names)}
        self.n = len(names)

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self, kind: str | None = None) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            expected = {"int": "integer", "end": "end of input"}.get(kind, repr(kind))
            got = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {expected}, got {got}", tok[2], self.text)
        self.pos += 1
        return tok

    def parse(self) -> RationalFunction:
        if self.peek()[0] == "end":
            raise ParseError("empty expression", 0, self.text)
        value = self.expr()
        self.take("end")
        return value

    def expr(self) -> RationalFunction:
        sign = 1
        if self.peek()[0] in "+-":
            sign = -1 if self.take()[0] == "-" else 1
        value = self.term()
        if sign < 0:
            value = -value
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> RationalFunction:
        value = self.factor()
        while self.peek()[0] in ("*", "/"):
            op, _, at = self.take()
            rhs = self.factor()
            if op == "*":
                value = value * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by zero", at, self.text)
                value = value / rhs
        return value

    def factor(self) -> RationalFunction:
        base = self.base()
        if self.peek()[0] == "^":
            self.take()
            _, digits, _ = self.take("int")
            base = base ** int(digits)
        return base

    def base(self) -> RationalFunction:
        kind, value, at = self.peek()
        if kind == "id":
            self.take()
            if value not in self.index:
                raise ParseError(f"unknown identifier {value!r}", at, self.text)
            return RationalFunction.variable(self.n, self.index[value])
        if kind == "int":
            self.take()
            return RationalFunction.constant(self.n, int(value))
        if kind == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        got = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"expected identifier, integer or '(', got {got}", at, self.text)


def parse_expression(text: str, names: Sequence[str]) -> RationalFunction:
    """Parse ``text`` into a canonical rational function over the variables ``names``."""
    if not isinstance(text, str):
        raise ParseError(f"expression must be a string, got {type(text).__name__}", 0)
    return _Parser(text, names).parse()


def parse_polynomial(text: str, names: Sequence[str]) -> Polynomial:
    r = parse_expression(text, names)
    if not r.den.is_constant():
        raise ParseError("expected a polynomial (no division by non-constants)", 0, text)
    return r.num.scale(1 / r.den.constant_term())


def render(r: RationalFunction | Polynomial, names: Sequence[str]) -> str:
    return r.format(names)


def parse_rational(value: Any) -> Fraction:
    """Exact rational from a JSON integer or a ``"p/q"`` string; floats are rejected."""
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        m = re.fullmatch(r"\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?", value)
        if m:
            den = int(m.group(2)) if m.group(2) else 1
            if den == 0:
                raise ValueError(f"zero denominator in {value!r}")
            return Fraction(int(m.group(1)), den)
    raise ValueError(f"not an exact rational literal: {value!r}")


# ---- system documents --------------------------------------------------------

_REQUIRED = ("variables", "f0", "f1", "h", "x0", "input_values")


def _require_list(doc: dict, key: str) -> list:
    value = doc.get(key)
    if not isinstance(value, list):
        raise SpecError("schema", f"field {key!r} must be a list")
    return value


def system_from_dict(doc: Any, validate: bool = True) -> RationalSystem:
    if not isinstance(doc, dict):
        raise SpecError("schema", "system document must be a JSON object")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise SpecError("schema", f"missing field(s): {', '.join(missing)}")
    names = _require_list(doc, "variables")
    if not names or not all(isinstance(v, str) and _IDENT.fullmatch(v) for v in names):
        raise SpecError("schema", "variables must be a nonempty list of identifiers")
    if len(set(names)) != len(names):
        raise SpecError("schema", "variables must be distinct")
    n = len(names)
    for key in ("f0", "f1", "x0"):
        if len(_require_list(doc, key)) != n:
            raise SpecError(
                "schema", f"field {key!r} has {len(doc[key])} entries but there are {n} variables"
            )
    variety_src = doc.get("variety", [])
    if not isinstance(variety_src, list):
        raise SpecError("schema", "field 'variety' must be a list")
    assumptions = doc.get("assumptions", {})
    if not isinstance(assumptions, dict) or not all(
        isinstance(assumptions.get(k, False), bool)
        for k in ("algebraically_controllable", "no_algebraic_gap")
    ):
        raise SpecError("schema", "assumptions must map flag names to booleans")
    unknown = set(assumptions) - {"algebraically_controllable", "no_algebraic_gap"}
    if unknown:
        raise SpecError("schema", f"unknown assumption flag(s): {', '.join(sorted(unknown))}")

    try:
        defining = [parse_polynomial(p, names) for p in variety_src]
        f0 = tuple(parse_expression(e, names) for e in doc["f0"])
        f1 = tuple(parse_expression(e, names) for e in doc["f1"])
        h = parse_expression(doc["h"], names)
        par = None
        if doc.get("parametrization") is not None:
            pdoc = doc["parametrization"]
            if not isinstance(pdoc, dict) or not isinstance(pdoc.get("parameters"), list) or not isinstance(pdoc.get("map"), list):
                raise SpecError("schema", "parametrization needs 'parameters' and 'map' lists")
            pnames = pdoc["parameters"]
            if len(pdoc["map"]) != n:
                raise SpecError("schema", "parametrization map must have one entry per variable")
            par = Parametrization(tuple(pnames), tuple(parse_expression(e, pnames) for e in pdoc["map"]))
    except ParseError as exc:
        raise SpecError("parse", str(exc)) from exc
    try:
        x0 = tuple(parse_rational(v) for v in doc["x0"])
        inputs = tuple(parse_rational(v) for v in _require_list(doc, "input_values"))
    except ValueError as exc:
        raise SpecError("schema", str(exc)) from exc
    try:
        X = Variety(n, defining, par)
    except VarietyError as exc:
        raise SpecError("validation", str(exc), [Violation("empty-variety", str(exc))]) from exc

    system = RationalSystem(
        variables=tuple(names),
        X=X,
        f0=f0,
        f1=f1,
        h=h,
        x0=x0,
        input_values=inputs,
        assumptions=Assumptions(
            algebraically_controllable=assumptions.get("algebraically_controllable", False),
            no_algebraic_gap=assumptions.get("no_algebraic_gap", False),
        ),
        name=doc.get("name"),
    )
    if validate:
        problems = validate_system(system)
        if problems:
            raise SpecError(
                "validation", "; ".join(v.message for v in problems), problems
            )
    return system


def load_system(document: bytes | str, validate: bool = True) -> RationalSystem:
    """Parse a JSON system document and validate the resulting system."""
    try:
        doc = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SpecError("json", f"malformed JSON: {exc}") from exc
    return system_from_dict(doc, validate)


def system_to_dict(s: RationalSystem) -> dict:
    names = s.variables
    doc: dict[str, Any] = {
        "variables": list(names),
        "variety": [g.format(names) for g in s.X.defining],
        "f0": [f.format(names) for f in s.f0],
        "f1": [f.format(names) for f in s.f1],
        "h": s.h.format(names),
        "x0": [format_rational(c) for c in s.x0],
        "input_values": [format_rational(c) for c in s.input_values],
        "assumptions": {
            "algebraically_controllable": s.assumptions.algebraically_controllable,
            "no_algebraic_gap": s.assumptions.no_algebraic_gap,
        },
    }
    if s.name is not None:
        doc["name"] = s.name
    par = s.X.parametrization
    if par is not None:
        doc["parametrization"] = {
            "parameters": list(par.parameters),
            "map": [im.format(par.parameters) for im in par.images],
        }
    return doc


def dump_system(s: RationalSystem) -> str:
    return emit_report(system_to_dict(s))


# ---- reports -------------------------------------------------------------------


def to_jsonable(obj: Any) -> Any:
    """Convert report objects into plain JSON values (rationals become ``"p/q"`` strings)."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, RationalSystem):
        return system_to_dict(obj)
    if isinstance(obj, (RationalFunction, Polynomial)):
        return obj.format()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def emit_report(report: Any) -> str:
    """Deterministic JSON text for a report (sorted keys, fixed indentation)."""
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
