"""Text formats: term syntax, the theory file format, derivation JSON.

Theory files are line based:

    theory <name>
    op <symbol>/<arity>
    axiom <term> = <term>

Comments start with `#`.  Variables are identifiers starting with a lowercase
letter; applications are written `f(t1,...,tn)`.
"""
from __future__ import annotations

import json
import re
from typing import Mapping, Optional

from .terms import Application, OperationSymbol, Term, Variable, render_term
from .theories import Identity, Theory, make_theory

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_VARIABLE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_OP_DECL = re.compile(r"([A-Za-z][A-Za-z0-9_]*)\s*/\s*(\d+)\Z")


class ParseError(Exception):
    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.message = message
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}"
            if col is not None:
                where += f", column {col}"
            where += ": "
        super().__init__(where + message)


class _TermParser:
    """Recursive-descent parser for the shared term syntax."""

    def __init__(self, text: str, arities: Optional[Mapping[str, int]], line: Optional[int]):
        self.text = text
        self.pos = 0
        self.arities = arities
        self.line = line

    def error(self, message: str, at: Optional[int] = None) -> ParseError:
        col = (self.pos if at is None else at) + 1
        return ParseError(message, self.line, col)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def parse(self) -> Term:
        t = self.parse_term()
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error(f"unexpected {self.text[self.pos]!r} after term")
        return t

    def parse_term(self) -> Term:
        self.skip_ws()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            got = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            raise self.error(f"expected an identifier, got {got!r}")
        name = m.group(0)
        start = self.pos
        self.pos = m.end()
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == "(":
            self.pos += 1
            children = [self.parse_term()]
            self.skip_ws()
            while self.pos < len(self.text) and self.text[self.pos] == ",":
                self.pos += 1
                children.append(self.parse_term())
                self.skip_ws()
            if self.pos >= len(self.text) or self.text[self.pos] != ")":
                raise self.error("expected ',' or ')'")
            self.pos += 1
            if self.arities is not None:
                if name not in self.arities:
                    raise self.error(f"unknown symbol {name!r}", at=start)
                if self.arities[name] != len(children):
                    raise self.error(
                        f"arity mismatch: {name} is declared /{self.arities[name]} "
                        f"but applied to {len(children)} arguments", at=start)
            return Application(OperationSymbol(name, len(children)), tuple(children))
        if not _VARIABLE.match(name):
            raise self.error(
                f"{name!r} is not a variable (variables start lowercase); "
                f"write {name}(...) for an application", at=start)
        return Variable(name)


def parse_term(text: str, arities: Optional[Mapping[str, int]] = None,
               line: Optional[int] = None) -> Term:
    return _TermParser(text, arities, line).parse()


def parse_identity(text: str, arities: Optional[Mapping[str, int]] = None,
                   line: Optional[int] = None) -> Identity:
    if text.count("=") != 1:
        raise ParseError("an identity needs exactly one '='", line)
    left, right = text.split("=")
    return Identity(parse_term(left.strip(), arities, line),
                    parse_term(right.strip(), arities, line))


def parse_theory(text: str) -> Theory:
    name: Optional[str] = None
    symbols: list[OperationSymbol] = []
    arities: dict[str, int] = {}
    identities: list[Identity] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "theory":
            if name is not None:
                raise ParseError("duplicate 'theory' declaration", lineno)
            if not rest or not _IDENT.match(rest):
                raise ParseError("expected a theory name", lineno)
            name = rest
        elif keyword == "op":
            m = _OP_DECL.match(rest)
            if not m:
                raise ParseError("expected 'op <symbol>/<arity>'", lineno)
            sym, arity = m.group(1), int(m.group(2))
            if sym in arities:
                raise ParseError(f"duplicate declaration of {sym!r}", lineno)
            arities[sym] = arity
            symbols.append(OperationSymbol(sym, arity))
        elif keyword == "axiom":
            if name is None:
                raise ParseError("'axiom' before 'theory' declaration", lineno)
            identities.append(parse_identity(rest, arities, lineno))
        else:
            raise ParseError(f"unknown declaration {keyword!r}", lineno)
    if name is None:
        raise ParseError("missing 'theory' declaration", 1)
    return make_theory(name, symbols, identities)


def render_identity(e: Identity) -> str:
    return f"{render_term(e.lhs)} = {render_term(e.rhs)}"


def render_theory(t: Theory) -> str:
    lines = [f"theory {t.name}"]
    lines += [f"op {s.name}/{s.arity}" for s in t.symbols]
    lines += [f"axiom {render_identity(e)}" for e in t.identities]
    return "\n".join(lines) + "\n"


def theory_to_json(t: Theory) -> dict:
    return {
        "name": t.name,
        "ops": [{"name": s.name, "arity": s.arity} for s in t.symbols],
        "axioms": [render_identity(e) for e in t.identities],
        "renames": [list(pair) for pair in t.renames],
    }


def theory_from_json(data: dict) -> Theory:
    symbols = [OperationSymbol(o["name"], int(o["arity"])) for o in data["ops"]]
    arities = {s.name: s.arity for s in symbols}
    identities = [parse_identity(a, arities) for a in data["axioms"]]
    renames = tuple((a, b) for a, b in data.get("renames", []))
    return make_theory(data["name"], symbols, identities, renames=renames)


def load_theory(path: str) -> Theory:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    if path.endswith(".json"):
        return theory_from_json(json.loads(text))
    return parse_theory(text)
