"""First-order terms: positions, occurrences, matching, substitution, renaming.

Terms are immutable values; every function in this module is pure, so terms
can be shared freely between threads and used as dict keys.

Positions are tuples of 1-based child indices; the empty tuple is the root.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Union


class InvalidPositionError(Exception):
    """A position walked off the term it was applied to."""


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class OperationSymbol:
    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class Application:
    symbol: OperationSymbol
    children: tuple["Term", ...]

    def __post_init__(self) -> None:
        if len(self.children) != self.symbol.arity:
            raise ValueError(
                f"{self.symbol.name} has arity {self.symbol.arity}, "
                f"got {len(self.children)} arguments"
            )

    def __str__(self) -> str:
        return render_term(self)


Term = Union[Variable, Application]
Position = tuple[int, ...]
Substitution = Mapping[Variable, Term]

ROOT: Position = ()


def var(name: str) -> Variable:
    return Variable(name)


def app(symbol: OperationSymbol, *children: Term) -> Application:
    return Application(symbol, tuple(children))


def render_term(t: Term) -> str:
    if isinstance(t, Variable):
        return t.name
    return f"{t.symbol.name}({','.join(render_term(c) for c in t.children)})"


def term_size(t: Term) -> int:
    """Number of nodes in the syntax tree."""
    if isinstance(t, Variable):
        return 1
    return 1 + sum(term_size(c) for c in t.children)


def term_depth(t: Term) -> int:
    if isinstance(t, Variable):
        return 0
    if not t.children:
        return 1
    return 1 + max(term_depth(c) for c in t.children)


def is_flat(t: Term) -> bool:
    """True for a variable or a symbol applied to variables only.

    Flat terms contain at most one operation symbol, which is what "linear"
    means for the identities this package works with.
    """
    if isinstance(t, Variable):
        return True
    return all(isinstance(c, Variable) for c in t.children)


def positions(t: Term, prefix: Position = ()) -> Iterator[Position]:
    """All positions of t in preorder, root first."""
    yield prefix
    if isinstance(t, Application):
        for i, c in enumerate(t.children, start=1):
            yield from positions(c, prefix + (i,))


def subterm_at(t: Term, p: Position) -> Term:
    cur = t
    for i in p:
        if isinstance(cur, Variable) or not 1 <= i <= len(cur.children):
            raise InvalidPositionError(f"position {list(p)} invalid in {render_term(t)}")
        cur = cur.children[i - 1]
    return cur


def replace_at(t: Term, p: Position, u: Term) -> Term:
    if not p:
        return u
    i = p[0]
    if isinstance(t, Variable) or not 1 <= i <= len(t.children):
        raise InvalidPositionError(f"position {list(p)} invalid in {render_term(t)}")
    children = list(t.children)
    children[i - 1] = replace_at(children[i - 1], p[1:], u)
    return Application(t.symbol, tuple(children))


@dataclass(frozen=True)
class Occurrence:
    """A position in a host term together with the subterm it reaches."""

    position: Position
    subterm: Term


def occurrence_at(t: Term, p: Position) -> Occurrence:
    return Occurrence(p, subterm_at(t, p))


def occurrences(t: Term) -> Iterator[Occurrence]:
    for p in positions(t):
        yield Occurrence(p, subterm_at(t, p))


def variable_occurrences(t: Term) -> Iterator[tuple[Position, Variable]]:
    for p in positions(t):
        s = subterm_at(t, p)
        if isinstance(s, Variable):
            yield p, s


def term_variables(t: Term) -> tuple[Variable, ...]:
    """Distinct variables of t in order of first occurrence (preorder)."""
    seen: dict[Variable, None] = {}
    for _, v in variable_occurrences(t):
        seen.setdefault(v)
    return tuple(seen)


def term_symbols(t: Term) -> frozenset[OperationSymbol]:
    if isinstance(t, Variable):
        return frozenset()
    out = {t.symbol}
    for c in t.children:
        out |= term_symbols(c)
    return frozenset(out)


def apply_substitution(t: Term, subst: Substitution) -> Term:
    """Homomorphic image of t; variables outside the map are left unchanged."""
    if isinstance(t, Variable):
        return subst.get(t, t)
    return Application(t.symbol, tuple(apply_substitution(c, subst) for c in t.children))


def compose_substitutions(first: Substitution, second: Substitution) -> dict[Variable, Term]:
    """The substitution equivalent to applying `first` then `second`."""
    out = {v: apply_substitution(t, second) for v, t in first.items()}
    for v, t in second.items():
        out.setdefault(v, t)
    return out


def match_term(pattern: Term, target: Term,
               binding: Optional[Mapping[Variable, Term]] = None
               ) -> Optional[dict[Variable, Term]]:
    """One-sided syntactic matching: a substitution s with s(pattern) = target.

    Returns None when no such substitution exists.  The result is unique,
    restricted to the pattern's variables (extended with `binding` if given).
    """
    out: dict[Variable, Term] = dict(binding) if binding else {}
    stack = [(pattern, target)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Variable):
            bound = out.get(p)
            if bound is None:
                out[p] = t
            elif bound != t:
                return None
        else:
            if not isinstance(t, Application) or t.symbol != p.symbol:
                return None
            stack.extend(zip(p.children, t.children))
    return out


def canonical_variable(i: int) -> Variable:
    return Variable(f"v{i}")


def canonical_enumeration() -> Iterator[Variable]:
    for i in itertools.count():
        yield canonical_variable(i)


def fresh_variables(avoid: Iterable[str]) -> Iterator[Variable]:
    """Canonical enumeration, skipping names already in use."""
    taken = set(avoid)
    for v in canonical_enumeration():
        if v.name not in taken:
            yield v


def rename_jointly(terms: Iterable[Term]) -> tuple[tuple[Term, ...], dict[Variable, Variable]]:
    """Rename variables to v0, v1, ... by first occurrence across all terms."""
    mapping: dict[Variable, Variable] = {}
    renamed = []
    for t in terms:
        for v in term_variables(t):
            if v not in mapping:
                mapping[v] = canonical_variable(len(mapping))
        renamed.append(apply_substitution(t, mapping))
    return tuple(renamed), mapping


def canonical_rename(t: Term) -> Term:
    """Variables renamed to v0, v1, ... in preorder first-occurrence order.

    Idempotent; two terms have equal canonical forms exactly when they are
    equal up to an injective renaming of variables.
    """
    (renamed,), _ = rename_jointly([t])
    return renamed


def term_key(t: Term):
    """Total order key: variables before applications, applications by
    symbol name, then arity, then children."""
    if isinstance(t, Variable):
        return (0, t.name)
    return (1, t.symbol.name, t.symbol.arity, tuple(term_key(c) for c in t.children))
