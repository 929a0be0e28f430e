import itertools

import pytest
from hypothesis import given, settings, strategies as hst

from autocsp import structures as st
from autocsp.homset import find_hom
from autocsp.structures import (GRAPH, FiniteStructure, Signature, StructureError, clique, graph,
                                path, transitive_tournament, zigzag)

from oracles import brute_hom_exists


@hst.composite
def small_graphs(draw, max_v=4):
    n = draw(hst.integers(1, max_v))
    pairs = list(itertools.product(range(n), repeat=2))
    es = draw(hst.lists(hst.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return graph(es, range(n))


# ----------------------------------------------------------------- types


def test_signature_rejects_duplicates_and_zero_arity():
    with pytest.raises(StructureError):
        Signature((("E", 2), ("E", 1)))
    with pytest.raises(StructureError):
        Signature((("R", 0),))


def test_structure_validates_tuples():
    with pytest.raises(StructureError):
        FiniteStructure(GRAPH, (0, 1), {"E": [(0, 2)]})
    with pytest.raises(StructureError):
        FiniteStructure(GRAPH, (0, 0), {"E": []})
    with pytest.raises(StructureError):
        FiniteStructure(GRAPH, (0, 1), {"E": [(0,)]})


def test_structures_are_values():
    assert graph([(0, 1)]) == graph([(0, 1)], [0, 1])
    assert hash(graph([(0, 1)])) == hash(graph([(0, 1)]))


# ------------------------------------------------------------ generators


def test_clique_three():
    k3 = clique(3)
    assert len(k3) == 3
    assert len(k3.relations["E"]) == 6


def test_zigzag_zero_is_p3():
    assert st.is_isomorphic(zigzag(0), path(3))


def test_zigzag_shape():
    for n in range(6):
        z = zigzag(n)
        assert len(z) == 2 * n + 4
        # a'0, a0..an, b0..bn, b'n carry 2n + 3 edges
        assert len(z.relations["E"]) == 2 * n + 3
        assert st.is_connected(z)


def test_link_zero_is_single_looped_vertex():
    l0 = st.link(0)
    assert l0.domain == (0,)
    assert l0.relations["E"] == frozenset({(0, 0)})


def test_link_has_all_tuples_between_neighbours():
    l2 = st.link(2)
    for i, j in itertools.product(range(3), repeat=2):
        assert ((i, j) in l2.relations["E"]) == (abs(i - j) <= 1)


def test_link_over_ternary_signature():
    sig = Signature((("R", 3),))
    l1 = st.link(1, sig)
    assert len(l1.relations["R"]) == 8


def test_generate_dispatch():
    assert st.generate("clique", 3) == clique(3)
    assert st.generate("path", 2) == path(2)
    assert st.generate("transitive_tournament", 2) == transitive_tournament(2)
    with pytest.raises(StructureError):
        st.generate("clique", -1)
    with pytest.raises(StructureError):
        st.generate("nonsense", 1)


def test_unary_singleton():
    sig = Signature((("P", 1), ("Q", 1)))
    s = st.unary_singleton({"P"}, sig)
    assert len(s) == 1 and s.n_tuples() == 1


# --------------------------------------------------------- constructions


def test_product_of_single_edges():
    p = st.product(path(1), path(1))
    assert len(p) == 4
    assert p.relations["E"] == frozenset({((0, 0), (1, 1))})


def test_product_k2_k2():
    p = st.product(clique(2), clique(2))
    assert len(p) == 4
    assert len(p.relations["E"]) == 4


@settings(max_examples=40, deadline=None)
@given(small_graphs(3), small_graphs(3))
def test_product_edge_count(a, b):
    p = st.product(a, b)
    assert len(p.relations["E"]) == len(a.relations["E"]) * len(b.relations["E"])


def test_disjoint_union_of_edges():
    u = st.disjoint_union(path(1), path(1))
    assert len(u) == 4
    assert len(u.relations["E"]) == 2


@settings(max_examples=40, deadline=None)
@given(small_graphs(3), small_graphs(3))
def test_disjoint_union_components(a, b):
    u = st.disjoint_union(a, b)
    assert len(st.connected_components(u)) == len(st.connected_components(a)) + len(st.connected_components(b))


def test_disjoint_union_with_empty_structure():
    e = FiniteStructure(GRAPH, (), {"E": []})
    a = path(2)
    assert st.is_isomorphic(st.disjoint_union(e, a), a)


def test_mark_target():
    t2 = transitive_tournament(2)
    m = st.mark_target(t2)
    assert len(m.signature.predicates) == len(t2.signature.predicates) + len(t2)
    for y in t2.domain:
        assert m.relations[st.mark_name(y)] == frozenset({(y,)})
    with pytest.raises(StructureError):
        st.mark_target(FiniteStructure(GRAPH, (), {"E": []}))


def _marked_source(b, n, edges, marks):
    sig = st.mark_target(b).signature
    rels = {"E": edges}
    for y in b.domain:
        rels[st.mark_name(y)] = [(x,) for x, z in marks.items() if z == y]
    return FiniteStructure(sig, tuple(range(n)), rels)


def test_collapse_marks_small_instance():
    # vertices 9..13 renumbered 0..4; 9 carries mark 0 and 11 carries mark 1
    t2 = transitive_tournament(2)
    a = _marked_source(t2, 5, [(0, 1), (2, 1), (2, 3), (3, 4)], {0: 0, 2: 1})
    phi = st.collapse_marks(a, t2)
    assert len(phi) == 8
    cross = {e for e in phi.relations["E"] if {e[0][0], e[1][0]} == {0, 1}}
    assert cross == {((0, 0), (1, 1)), ((0, 0), (1, 2)), ((1, 0), (0, 2)), ((0, 2), (1, 2))}
    assert len(phi.relations["E"]) == 4 + 3 + 4
    assert find_hom(a, st.mark_target(t2)) is None
    assert find_hom(phi, t2) is None


def test_collapse_marks_without_marks_is_disjoint_union():
    t2 = transitive_tournament(2)
    a = _marked_source(t2, 3, [(0, 1), (1, 2)], {})
    phi = st.collapse_marks(a, t2)
    assert st.is_isomorphic(phi, st.disjoint_union(path(2), t2))


@pytest.mark.parametrize("b", [transitive_tournament(2), path(2)], ids=["T2", "P2"])
def test_collapse_marks_reduction_exhaustive(b):
    # every graph on <= 3 vertices with every marking by at most one element of b
    for g in st.all_graphs(3):
        n = len(g)
        for choice in itertools.product([None, *b.domain], repeat=n):
            marks = {x: y for x, y in zip(g.domain, choice) if y is not None}
            a = _marked_source(b, n, list(g.relations["E"]), marks)
            lhs = brute_hom_exists(a, st.mark_target(b))
            rhs = brute_hom_exists(st.collapse_marks(a, b), b)
            assert lhs == rhs


def test_collapse_marks_rejects_wrong_signature():
    with pytest.raises(StructureError):
        st.collapse_marks(path(1), path(2))


# ------------------------------------------------------------- adjacency


def test_adjacency_successors_in_p2():
    assert set(st.adjacency(path(2), 1, "E", 0)) == {(2,)}
    assert set(st.adjacency(path(2), 1, "E", 1)) == {(0,)}


def test_adjacency_in_k3():
    k3 = clique(3)
    for v in k3.domain:
        assert len(st.adjacency(k3, v, "E", 0)) == 2


def test_core_elements_have_distinct_adjacency():
    from autocsp.homset import is_core
    for g in st.all_graphs(3, connected=True):
        if not is_core(g):
            continue
        adj = {x: [set(st.adjacency(g, x, "E", i)) for i in range(2)] for x in g.domain}
        for x, y in itertools.combinations(g.domain, 2):
            assert adj[x] != adj[y]


# --------------------------------------------------------------- metrics


def test_zigzag_is_sigma_tree():
    for n in range(5):
        assert st.is_sigma_tree(zigzag(n))


def test_k2_is_not_sigma_tree():
    assert not st.is_sigma_tree(clique(2))


def test_ball_in_p4():
    b = st.ball(path(4), 2, 1)
    assert st.is_isomorphic(b, path(2))


def test_distance_and_diameter():
    p = path(4)
    assert st.distance(p, 0, 4) == 4
    assert st.diameter(p) == 4
    u = st.disjoint_union(path(1), path(1))
    assert st.distance(u, (0, 0), (1, 0)) == float("inf")
    assert not st.is_connected(u)


def test_metrics_bundle():
    m = st.metrics(zigzag(1))
    assert m["diameter"] == 5
    assert m["components"] == 1
    assert m["sigma_tree"]


# ----------------------------------------------------------- isomorphism


@settings(max_examples=60, deadline=None)
@given(small_graphs(4), hst.randoms(use_true_random=False))
def test_canonical_form_is_relabel_invariant(a, rnd):
    perm = list(a.domain)
    rnd.shuffle(perm)
    b = a.relabel(dict(zip(a.domain, perm)))
    assert st.canonical_form(a) == st.canonical_form(b)


@settings(max_examples=40, deadline=None)
@given(small_graphs(4))
def test_from_canonical_round_trip(a):
    form = st.canonical_form(a)
    assert st.is_isomorphic(st.from_canonical(a.signature, form), a)


def test_graph_counts_up_to_isomorphism():
    # labelled digraphs with loops, counted up to isomorphism
    counts = [len(st.all_graphs(n, n)) for n in range(1, 5)]
    assert counts == [2, 10, 104, 3044]


def test_connected_graph_corpus_is_connected():
    for g in st.all_graphs(3, connected=True):
        assert st.is_connected(g)
