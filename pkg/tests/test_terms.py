import pytest
from hypothesis import given, strategies as st

from linvar.dsl import parse_term
from linvar.terms import (
    Application,
    InvalidPositionError,
    OperationSymbol,
    Variable,
    apply_substitution,
    canonical_rename,
    compose_substitutions,
    is_flat,
    match_term,
    positions,
    replace_at,
    subterm_at,
    term_size,
    term_variables,
)

F1 = OperationSymbol("f", 1)
G2 = OperationSymbol("g", 2)
P3 = OperationSymbol("p", 3)

VARS = [Variable(n) for n in ("x", "y", "z")]


def terms(max_depth=3):
    base = st.sampled_from(VARS)

    def extend(children):
        return st.one_of(
            st.builds(lambda c: Application(F1, (c,)), children),
            st.builds(lambda a, b: Application(G2, (a, b)), children, children),
            st.builds(lambda a, b, c: Application(P3, (a, b, c)),
                      children, children, children),
        )

    return st.recursive(base, extend, max_leaves=8)


substitutions = st.dictionaries(st.sampled_from(VARS), terms(), max_size=3)


class TestSubtermAt:
    def test_child(self):
        t = parse_term("p(x,m(y,y),z)")
        assert subterm_at(t, (2,)) == parse_term("m(y,y)")

    def test_root(self):
        t = parse_term("f(x)")
        assert subterm_at(t, ()) == t

    def test_off_the_tree(self):
        with pytest.raises(InvalidPositionError):
            subterm_at(parse_term("p(x,y,y)"), (4,))


class TestReplaceAt:
    def test_inner(self):
        assert replace_at(parse_term("f(g(x,x))"), (1,), parse_term("h(y)")) \
            == parse_term("f(h(y))")

    def test_root(self):
        assert replace_at(Variable("x"), (), parse_term("p(a,b,c)")) \
            == parse_term("p(a,b,c)")

    def test_sibling_untouched(self):
        assert replace_at(parse_term("p(x,y,y)"), (2,), parse_term("m(y,y)")) \
            == parse_term("p(x,m(y,y),y)")

    def test_invalid(self):
        with pytest.raises(InvalidPositionError):
            replace_at(parse_term("f(x)"), (1, 1), Variable("y"))


class TestSubstitution:
    def test_basic(self):
        sigma = {Variable("x"): Variable("a"), Variable("y"): Variable("b")}
        assert apply_substitution(parse_term("p(x,y,y)"), sigma) == parse_term("p(a,b,b)")

    def test_empty_is_identity(self):
        t = parse_term("g(f(x),y)")
        assert apply_substitution(t, {}) == t

    def test_collapsing(self):
        assert apply_substitution(parse_term("g(x,y)"), {Variable("x"): Variable("y")}) \
            == parse_term("g(y,y)")


class TestMatch:
    def test_binds_whole_subterms(self):
        sigma = match_term(parse_term("p(v,w,w)"), parse_term("p(x,m(y,y),m(y,y))"))
        assert sigma == {Variable("v"): Variable("x"),
                         Variable("w"): parse_term("m(y,y)")}

    def test_conflicting_repeat(self):
        assert match_term(parse_term("p(v,w,w)"), parse_term("p(x,y,z)")) is None

    def test_variable_pattern(self):
        assert match_term(Variable("v"), parse_term("f(x)")) \
            == {Variable("v"): parse_term("f(x)")}


class TestCanonicalRename:
    def test_first_occurrence_order(self):
        assert canonical_rename(parse_term("p(y,y,x)")) == parse_term("p(v0,v0,v1)")

    def test_idempotent_on_example(self):
        assert canonical_rename(parse_term("p(v0,v0,v1)")) == parse_term("p(v0,v0,v1)")

    def test_two_vars(self):
        assert canonical_rename(parse_term("g(z,x)")) == parse_term("g(v0,v1)")


def test_is_flat():
    assert is_flat(Variable("x"))
    assert is_flat(parse_term("p(x,y,y)"))
    assert not is_flat(parse_term("f(g(x,y))"))


def test_occurrences_pair_positions_with_subterms():
    from linvar.terms import occurrence_at, occurrences

    t = parse_term("p(x,g(y,y),z)")
    occs = list(occurrences(t))
    assert occs[0].position == () and occs[0].subterm == t
    assert occurrence_at(t, (2, 1)).subterm == Variable("y")
    for occ in occs:
        assert subterm_at(t, occ.position) == occ.subterm


# -- properties ---------------------------------------------------------------


@given(terms())
def test_positions_cover_the_term(t):
    assert len(list(positions(t))) == term_size(t)
    for p in positions(t):
        subterm_at(t, p)


@given(terms(), terms())
def test_replace_then_read_back(t, u):
    for p in positions(t):
        assert subterm_at(replace_at(t, p, u), p) == u
        assert replace_at(t, p, subterm_at(t, p)) == t


@given(terms(), substitutions, substitutions)
def test_substitution_composes(t, sigma, tau):
    once = apply_substitution(apply_substitution(t, sigma), tau)
    composed = compose_substitutions(sigma, tau)
    assert once == apply_substitution(t, composed)


@given(terms())
def test_canonical_rename_idempotent(t):
    c = canonical_rename(t)
    assert canonical_rename(c) == c


@given(terms())
def test_canonical_rename_invariant_under_injective_renaming(t):
    swap = {Variable("x"): Variable("s"), Variable("y"): Variable("t"),
            Variable("z"): Variable("u")}
    assert canonical_rename(apply_substitution(t, swap)) == canonical_rename(t)


@given(terms(), substitutions)
def test_match_recovers_substitution(t, sigma):
    instance = apply_substitution(t, sigma)
    recovered = match_term(t, instance)
    assert recovered is not None
    assert apply_substitution(t, recovered) == instance
    for v in term_variables(t):
        assert recovered[v] == sigma.get(v, v)
