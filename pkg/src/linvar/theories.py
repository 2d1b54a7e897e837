"""Identities, signatures and theories.

A theory is a named signature plus a finite set of identities.  Identities
are unordered pairs of terms; theories store them in a canonical form so
that set-level comparisons (needed when comparing iterated derivatives)
are plain syntactic equality.  Construction order is preserved, which keeps
original axioms ahead of derived identities in search orders.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .terms import (
    Application,
    OperationSymbol,
    Term,
    Variable,
    canonical_rename,
    is_flat,
    rename_jointly,
    render_term,
    term_key,
    term_symbols,
    term_variables,
)


class UnknownSymbolError(Exception):
    """An identity uses an operation symbol outside the theory's signature."""


class SignatureMismatchError(Exception):
    """Two theories over different signatures were compared."""


@dataclass(frozen=True)
class Identity:
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{render_term(self.lhs)} = {render_term(self.rhs)}"


def identity_variables(e: Identity) -> tuple[Variable, ...]:
    seen: dict[Variable, None] = {}
    for v in term_variables(e.lhs) + term_variables(e.rhs):
        seen.setdefault(v)
    return tuple(seen)


def identity_symbols(e: Identity) -> frozenset[OperationSymbol]:
    return term_symbols(e.lhs) | term_symbols(e.rhs)


def is_linear_identity(e: Identity) -> bool:
    """Both sides contain at most one operation symbol."""
    return is_flat(e.lhs) and is_flat(e.rhs)


def canonicalize_identity(e: Identity) -> Identity:
    """Orient by term order, then rename variables jointly.

    Two identities canonicalize to the same value exactly when they are equal
    up to symmetry and injective variable renaming.  Idempotent.
    """
    kl = term_key(canonical_rename(e.lhs))
    kr = term_key(canonical_rename(e.rhs))
    if kl < kr:
        ordered = [(e.lhs, e.rhs)]
    elif kr < kl:
        ordered = [(e.rhs, e.lhs)]
    else:
        # The sides are renamings of each other; pick the smaller joint form.
        ordered = [(e.lhs, e.rhs), (e.rhs, e.lhs)]
    best = None
    for left, right in ordered:
        (l2, r2), _ = rename_jointly([left, right])
        key = (term_key(l2), term_key(r2))
        if best is None or key < best[0]:
            best = (key, Identity(l2, r2))
    assert best is not None
    return best[1]


@dataclass(frozen=True)
class Theory:
    """A named signature with a canonicalized, order-preserving identity list.

    `renames` records symbol renamings applied while building the theory
    (only joins produce them).
    """

    name: str
    symbols: tuple[OperationSymbol, ...]
    identities: tuple[Identity, ...]
    renames: tuple[tuple[str, str], ...] = field(default=())

    def symbol_named(self, name: str) -> Optional[OperationSymbol]:
        for s in self.symbols:
            if s.name == name:
                return s
        return None

    def max_arity(self) -> int:
        return max((s.arity for s in self.symbols), default=0)

    def identity_set(self) -> frozenset[Identity]:
        return frozenset(self.identities)

    def __str__(self) -> str:
        return self.name


def make_theory(name: str,
                symbols: Iterable[OperationSymbol],
                identities: Iterable[Identity],
                renames: tuple[tuple[str, str], ...] = ()) -> Theory:
    """Canonicalize, deduplicate and order-check the parts of a theory."""
    syms = tuple(sorted(set(symbols), key=lambda s: (s.name, s.arity)))
    by_name: dict[str, OperationSymbol] = {}
    for s in syms:
        if s.name in by_name:
            raise ValueError(f"duplicate symbol name {s.name!r} in signature")
        by_name[s.name] = s
    canon: dict[Identity, None] = {}
    for e in identities:
        for s in identity_symbols(e):
            if by_name.get(s.name) != s:
                raise UnknownSymbolError(
                    f"identity {e} uses {s} outside the signature of {name!r}")
        canon.setdefault(canonicalize_identity(e))
    return Theory(name, syms, tuple(canon), renames)


@dataclass(frozen=True)
class ValidationReport:
    theory_name: str
    is_linear: bool
    nonlinear_identities: tuple[Identity, ...]
    # status per symbol: "explicit" | "derivable" | "not-established"
    idempotency: tuple[tuple[str, str], ...]

    @property
    def is_idempotent(self) -> bool:
        return all(status in ("explicit", "derivable") for _, status in self.idempotency)

    @property
    def ok(self) -> bool:
        return self.is_linear and self.is_idempotent


def idempotency_identity(symbol: OperationSymbol) -> Identity:
    x = Variable("x")
    return Identity(x, Application(symbol, (x,) * symbol.arity))


def validate(theory: Theory, budget: Optional[int] = None) -> ValidationReport:
    """Check linearity and the idempotency of every symbol.

    Idempotency is an entailment question, so a symbol whose idempotency
    identity is not literally present is checked with the flat saturation
    engine; that check is only available when the theory is linear.
    """
    nonlinear = tuple(e for e in theory.identities if not is_linear_identity(e))
    linear = not nonlinear
    canon = theory.identity_set()

    base = None
    statuses: list[tuple[str, str]] = []
    for s in theory.symbols:
        if s.arity == 0:
            statuses.append((s.name, "not-established"))
            continue
        if canonicalize_identity(idempotency_identity(s)) in canon:
            statuses.append((s.name, "explicit"))
            continue
        if not linear:
            statuses.append((s.name, "not-established"))
            continue
        if base is None:
            from . import saturation

            base = saturation.saturate(theory, budget)
        goal = idempotency_identity(s)
        if base.entails(goal):
            statuses.append((s.name, "derivable"))
        else:
            statuses.append((s.name, "not-established"))
    return ValidationReport(theory.name, linear, nonlinear, tuple(statuses))


def _rename_symbols(t: Term, mapping: dict[str, OperationSymbol]) -> Term:
    if isinstance(t, Variable):
        return t
    sym = mapping.get(t.symbol.name, t.symbol)
    return Application(sym, tuple(_rename_symbols(c, mapping) for c in t.children))


def join_disjoint(a: Theory, b: Theory) -> Theory:
    """Union of two theories over a disjoint signature.

    Symbols of `b` clashing with names from `a` are renamed with a numeric
    suffix; the rename map is recorded on the result.
    """
    taken = {s.name for s in a.symbols}
    mapping: dict[str, OperationSymbol] = {}
    renames: list[tuple[str, str]] = []
    new_symbols = list(a.symbols)
    for s in b.symbols:
        if s.name in taken:
            k = 2
            while f"{s.name}_{k}" in taken:
                k += 1
            renamed = OperationSymbol(f"{s.name}_{k}", s.arity)
            mapping[s.name] = renamed
            renames.append((s.name, renamed.name))
            new_symbols.append(renamed)
            taken.add(renamed.name)
        else:
            new_symbols.append(s)
            taken.add(s.name)
    b_identities = [
        Identity(_rename_symbols(e.lhs, mapping), _rename_symbols(e.rhs, mapping))
        for e in b.identities
    ]
    return make_theory(
        f"join({a.name},{b.name})",
        new_symbols,
        list(a.identities) + b_identities,
        renames=tuple(renames),
    )


def embedded_components(a: Theory, b: Theory) -> tuple[Theory, Theory, Theory]:
    """The two component theories as they appear inside join_disjoint(a, b)."""
    joined = join_disjoint(a, b)
    mapping = {old: joined.symbol_named(new) for old, new in joined.renames}
    mapping = {k: v for k, v in mapping.items() if v is not None}
    b_symbols = [mapping.get(s.name, s) for s in b.symbols]
    b_identities = [
        Identity(_rename_symbols(e.lhs, mapping), _rename_symbols(e.rhs, mapping))
        for e in b.identities
    ]
    b_embedded = make_theory(b.name, b_symbols, b_identities)
    return a, b_embedded, joined


def theory_equal(a: Theory, b: Theory) -> bool:
    """Equality of canonicalized identity sets over one signature."""
    if set(a.symbols) != set(b.symbols):
        raise SignatureMismatchError(
            f"{a.name} and {b.name} have different signatures")
    return a.identity_set() == b.identity_set()
