import pytest

from linvar.dsl import parse_identity, parse_term
from linvar.presets import maltsev, semilattice
from linvar.projection import (
    DerivationOccurrence,
    InconsistencyDetectedError,
    NotAProjectionInstanceError,
    build_successor_graph,
    mark_T,
    occurrence_term,
    project_to_component,
    z_substituted_derivation,
)
from linvar.rewriting import Derivation, Proved, bfs_prove, make_step, verify_derivation
from linvar.terms import OperationSymbol, Variable, is_flat
from linvar.theories import join_disjoint, make_theory


def occ(index, *pos):
    return DerivationOccurrence(index, tuple(pos))


def edge_targets(graph, source, case=None):
    return {(e.target, e.case) if case is None else e.target
            for e in graph.adjacency.get(source, ())
            if case is None or e.case == case}


@pytest.fixture
def unary_collapse():
    """{f(v) = v} with spare symbols for building example terms."""
    return make_theory("collapse", [OperationSymbol("f", 1), OperationSymbol("g", 2),
                                    OperationSymbol("r", 2)],
                       [parse_identity("f(v) = v")])


class TestSuccessorGraph:
    def test_case1_untouched_sibling(self, unary_collapse):
        t = unary_collapse
        eq = t.identities[0]
        d = Derivation(t.name,
                       (parse_term("r(g(x,x),f(y))"), parse_term("r(g(x,x),y)")),
                       (make_step(eq, False, (2,), {Variable("v0"): Variable("y")}),))
        assert verify_derivation(t, d)
        graph = build_successor_graph(d)
        assert (occ(1, 1), 1) in edge_targets(graph, occ(0, 1))

    def test_case2_rewrite_inside(self, unary_collapse):
        t = unary_collapse
        eq = t.identities[0]
        d = Derivation(t.name,
                       (parse_term("f(g(x,f(y)))"), parse_term("f(g(x,y))")),
                       (make_step(eq, False, (1, 2), {Variable("v0"): Variable("y")}),))
        assert verify_derivation(t, d)
        graph = build_successor_graph(d)
        assert (occ(1, 1), 2) in edge_targets(graph, occ(0, 1))

    def test_case3_fanout_skips_fresh_variable_image(self):
        h = OperationSymbol("h", 3)
        t = make_theory("spread", [OperationSymbol("f", 1), OperationSymbol("g", 2), h],
                        [parse_identity("v = h(v,v,w)")])
        eq = t.identities[0]
        v0, v1 = Variable("v0"), Variable("v1")
        gxy = parse_term("g(x,y)")
        d = Derivation(t.name,
                       (parse_term("f(g(x,y))"),
                        parse_term("f(h(g(x,y),g(x,y),g(x,y)))")),
                       (make_step(eq, True, (1,), {v0: gxy, v1: gxy}),))
        assert verify_derivation(t, d)
        graph = build_successor_graph(d)
        targets = edge_targets(graph, occ(0, 1), case=3)
        assert occ(0, 1) in targets          # self-transport
        assert occ(1, 1, 1) in targets
        assert occ(1, 1, 2) in targets
        assert occ(1, 1, 3) not in targets   # that copy matches the fresh variable

    def test_case4_root_step(self):
        g, h = OperationSymbol("g", 3), OperationSymbol("h", 2)
        t = make_theory("merge", [g, h, OperationSymbol("k", 2)],
                        [parse_identity("g(v,v,w) = h(v,w)")])
        eq = t.identities[0]
        hxy = parse_term("k(x,y)")
        d = Derivation(t.name,
                       (parse_term("g(k(x,y),k(x,y),k(x,y))"),
                        parse_term("h(k(x,y),k(x,y))")),
                       (make_step(eq, True, (), {Variable("v0"): hxy, Variable("v1"): hxy}),))
        assert verify_derivation(t, d)
        graph = build_successor_graph(d)
        assert (occ(1,), 4) in edge_targets(graph, occ(0,))

    def test_edges_exist_in_both_directions(self, unary_collapse):
        t = unary_collapse
        eq = t.identities[0]
        d = Derivation(t.name, (parse_term("f(x)"), parse_term("x")),
                       (make_step(eq, True, (), {Variable("v0"): Variable("x")}),))
        graph = build_successor_graph(d)
        directions = {e.direction for e in graph.edges}
        assert directions == {1, -1}

    def test_edge_soundness(self, maltsev, semilattice):
        # every edge preserves the underlying term or rewrites it provably
        joined = join_disjoint(maltsev, semilattice)
        d = _spec_example_derivation(maltsev, semilattice)
        graph = build_successor_graph(d)
        for e in list(graph.edges)[:200]:
            a = occurrence_term(d, e.source)
            b = occurrence_term(d, e.target)
            if a == b:
                continue
            outcome = bfs_prove(joined, parse_identity(f"{a} = {b}"))
            assert isinstance(outcome, Proved), (str(a), str(b))


def _spec_example_derivation(mal, sem):
    joined = join_disjoint(mal, sem)
    ax_m = sem.identities[0]   # v0 = m(v0,v0)
    ax_p = mal.identities[0]   # v0 = p(v0,v1,v1)
    x, y = Variable("x"), Variable("y")
    v0, v1 = Variable("v0"), Variable("v1")
    myy = parse_term("m(y,y)")
    d = Derivation(joined.name,
                   (parse_term("p(x,y,y)"), parse_term("p(x,m(y,y),y)"),
                    parse_term("p(x,m(y,y),m(y,y))"), x),
                   (make_step(ax_m, True, (2,), {v0: y}),
                    make_step(ax_m, True, (3,), {v0: y}),
                    make_step(ax_p, False, (), {v0: x, v1: myy})))
    assert verify_derivation(joined, d)
    return d


class TestMarkT:
    def test_single_term(self, maltsev):
        d = Derivation(maltsev.name, (parse_term("p(x,y,z)"),), ())
        assert mark_T(d) == frozenset({occ(0)})

    def test_collapse_chain_reaches_final_variable(self, maltsev):
        from linvar.derivatives import derivative

        prime = derivative(maltsev)
        ax2, ind1 = prime.identities[1], prime.identities[2]
        x, y = Variable("x"), Variable("y")
        vs = [Variable(f"v{i}") for i in range(4)]
        d = Derivation(prime.name,
                       (parse_term("p(x,y,y)"), parse_term("p(y,y,y)"), y),
                       (make_step(ind1, True, (), {vs[0]: x, vs[1]: y, vs[2]: y, vs[3]: y}),
                        make_step(ax2, False, (), {vs[0]: y, vs[1]: y})))
        assert verify_derivation(prime, d)
        marked = mark_T(d)
        assert occ(2) in marked

    def test_join_example_reaches_goal(self, maltsev, semilattice):
        d = _spec_example_derivation(maltsev, semilattice)
        assert occ(3) in mark_T(d)

    def test_marking_reaches_goal_across_corpus(self):
        # over consistent components, the first term always reaches an
        # occurrence of the final variable
        from test_acceptance import _projection_corpus

        for _, _, d, _ in _projection_corpus()[:15]:
            marked = mark_T(d)
            goal = d.terms[-1]
            assert any(occurrence_term(d, o) == goal for o in marked), \
                [str(t) for t in d.terms]


class TestZSubstitution:
    def test_stepless_derivation_blankets_the_term(self, maltsev):
        d = Derivation(maltsev.name, (parse_term("p(x,y,x)"),), ())
        out = z_substituted_derivation(d)
        t = out.terms[0]
        children = set(t.children)
        assert len(children) == 1
        (z,) = children
        assert z.name not in {"x", "y"}

    def test_output_verifies(self, maltsev, semilattice):
        joined = join_disjoint(maltsev, semilattice)
        d = _spec_example_derivation(maltsev, semilattice)
        out = z_substituted_derivation(d)
        assert verify_derivation(joined, out)
        assert is_flat(out.terms[0])

    def test_marked_subset_controls_replacement(self, maltsev):
        d = Derivation(maltsev.name, (parse_term("p(x,y,x)"),), ())
        out = z_substituted_derivation(d, frozenset({occ(0, 2)}))
        t = out.terms[0]
        assert t.children[0] == Variable("x")
        assert t.children[2] == Variable("x")
        assert t.children[1] != Variable("y")


class TestProjectToComponent:
    def test_spec_example(self, maltsev, semilattice):
        d = _spec_example_derivation(maltsev, semilattice)
        result = project_to_component(maltsev, semilattice, d)
        assert result.owner_index == 1
        out = result.derivation
        assert [str(t) for t in out.terms] == ["p(x,y,y)", "x"]
        assert verify_derivation(result.owner_theory, out, allow_reflexivity=True)
        assert all(is_flat(t) for t in out.terms)

    def test_pure_component_derivation_passes_through(self, maltsev, semilattice):
        prime_free = maltsev
        ax1 = prime_free.identities[0]
        x, y = Variable("x"), Variable("y")
        d = Derivation(join_disjoint(maltsev, semilattice).name,
                       (parse_term("p(x,y,y)"), x),
                       (make_step(ax1, False, (), {Variable("v0"): x, Variable("v1"): y}),))
        result = project_to_component(maltsev, semilattice, d)
        assert [str(t) for t in result.derivation.terms] == ["p(x,y,y)", "x"]

    def test_zero_step_derivation_rejected(self, maltsev, semilattice):
        d = Derivation(join_disjoint(maltsev, semilattice).name,
                       (parse_term("p(x,y,y)"),), ())
        with pytest.raises(NotAProjectionInstanceError):
            project_to_component(maltsev, semilattice, d)

    def test_wrong_shape_rejected(self, maltsev, semilattice):
        joined = join_disjoint(maltsev, semilattice)
        ax_m = semilattice.identities[0]
        d = Derivation(joined.name, (parse_term("m(x,x)"), Variable("x")),
                       (make_step(ax_m, False, (), {Variable("v0"): Variable("x")}),))
        # fine shape, owned by the right component
        result = project_to_component(maltsev, semilattice, d)
        assert result.owner_index == 2
        deep = Derivation(joined.name,
                          (parse_term("p(m(x,x),y,y)"), parse_term("m(x,x)")),
                          (make_step(maltsev.identities[0], False, (),
                                     {Variable("v0"): parse_term("m(x,x)"),
                                      Variable("v1"): Variable("y")}),))
        with pytest.raises(NotAProjectionInstanceError):
            project_to_component(maltsev, semilattice, deep)

    def test_scrambled_walk_derivations_project(self):
        """Fact-anchored random walks through the join always flatten back."""
        import random

        from linvar import presets
        from linvar.derivatives import _fact_identity, order_fact_set
        from linvar.rewriting import Proved, SearchBounds, _expansions, bfs_prove
        from linvar.theories import Identity, embedded_components

        rng = random.Random(987)
        corpus = presets.presets()
        bounds = SearchBounds(max_terms=4000, max_depth=5, max_term_size=14)
        projected = 0
        for _ in range(60):
            a, b = rng.choice(corpus), rng.choice(corpus)
            a_emb, b_emb, joined = embedded_components(a, b)
            owner = rng.choice([a_emb, b_emb])
            facts = sorted(order_fact_set(owner))
            name, w = rng.choice(facts)
            fact = _fact_identity(owner.symbol_named(name), w)
            start, goal_var = fact.rhs, fact.lhs
            pool = tuple({v: None for v in (goal_var, *start.children)}) \
                + (Variable("u0"),)
            cur, terms, steps = start, [start], []
            for _ in range(rng.randint(0, 4)):
                options = [o for o in _expansions(joined, cur, pool, 12)
                           if not isinstance(o[0], Variable)]
                if not options:
                    break
                cur, step = rng.choice(options)
                terms.append(cur)
                steps.append(step)
            outcome = bfs_prove(joined, Identity(cur, goal_var), bounds)
            if not isinstance(outcome, Proved) or \
                    len(steps) + len(outcome.derivation.steps) == 0:
                continue
            d = Derivation(joined.name,
                           tuple(terms) + outcome.derivation.terms[1:],
                           tuple(steps) + outcome.derivation.steps)
            assert verify_derivation(joined, d)
            result = project_to_component(a, b, d)
            out = result.derivation
            assert verify_derivation(result.owner_theory, out, allow_reflexivity=True)
            assert all(is_flat(t) for t in out.terms)
            assert out.terms[0] == d.terms[0] and out.terms[-1] == d.terms[-1]
            projected += 1
        assert projected >= 40

    def test_inconsistency_detected_with_certificate(self, semilattice):
        g = OperationSymbol("g", 2)
        shaky = make_theory("shaky", [g], [
            parse_identity("g(v,v) = v"),
            parse_identity("v = g(v,w)"),
            parse_identity("v = g(w,v)"),
        ])
        joined = join_disjoint(shaky, semilattice)
        e_diag = shaky.identities[0]   # v0 = g(v0,v0)? check orientation below
        ids = {str(e): e for e in shaky.identities}
        diag = ids["v0 = g(v0,v0)"]
        left = ids["v0 = g(v0,v1)"]
        right = ids["v0 = g(v1,v0)"]
        x, y = Variable("x"), Variable("y")
        v0, v1 = Variable("v0"), Variable("v1")
        gxy = parse_term("g(x,y)")
        d = Derivation(joined.name,
                       (gxy, parse_term("g(g(x,y),y)"),
                        parse_term("g(g(x,y),g(x,y))"), gxy, x),
                       (make_step(left, True, (1,), {v0: x, v1: y}),
                        make_step(right, True, (2,), {v0: y, v1: x}),
                        make_step(diag, False, (), {v0: gxy}),
                        make_step(left, False, (), {v0: x, v1: y})))
        assert verify_derivation(joined, d)
        with pytest.raises(InconsistencyDetectedError) as excinfo:
            project_to_component(shaky, semilattice, d)
        cert = excinfo.value.derivation
        assert verify_derivation(joined, cert)
        assert {str(cert.terms[0]), str(cert.terms[-1])} == {"x", "y"}
