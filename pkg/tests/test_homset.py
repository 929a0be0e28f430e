import itertools
import random

import pytest
from hypothesis import given, settings, strategies as hst

from autocsp import homset as hs
from autocsp import structures as st
from autocsp.structures import clique, graph, path, transitive_tournament, zigzag

from oracles import brute_core_size, brute_homs, counts_into, graph_hom_counts

T2 = transitive_tournament(2)
P2 = path(2)


@hst.composite
def small_graphs(draw, max_v=3):
    n = draw(hst.integers(1, max_v))
    pairs = list(itertools.product(range(n), repeat=2))
    es = draw(hst.lists(hst.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return graph(es, range(n))


# --------------------------------------------------------------- search


def test_zigzag_one_maps_to_t2_uniquely():
    h = hs.find_hom(zigzag(1), T2)
    assert h is not None and h.is_valid()
    # a'0, a0, b0, a1, b1, b'1 coloured 0, 1, 2, 0, 1, 2
    assert dict(h.mapping) == {0: 0, 1: 1, 2: 2, 3: 0, 4: 1, 5: 2}


def test_known_colouring_of_zigzag_five():
    z = zigzag(5)
    colour = {0: 0, 1: 1, 12: 1, 13: 2}
    colour.update({i: 2 for i in range(2, 11, 2)})
    colour.update({i: 0 for i in range(3, 12, 2)})
    assert hs.is_hom(z, T2, colour)


def test_zigzag_zero_is_obstruction_of_t2():
    assert hs.find_hom(zigzag(0), T2) is None


@pytest.mark.parametrize("n", range(4))
def test_zigzags_do_not_map_to_p2(n):
    assert hs.find_hom(zigzag(n), P2) is None


@settings(max_examples=80, deadline=None)
@given(small_graphs(4), small_graphs(3))
def test_find_hom_agrees_with_brute_force(a, b):
    h = hs.find_hom(a, b)
    assert (h is not None) == bool(brute_homs(a, b))
    if h is not None:
        assert h.is_valid()


def test_find_hom_respects_allowed_images():
    h = hs.find_hom(P2, T2, allowed={0: [0]})
    assert h[0] == 0
    assert hs.find_hom(P2, T2, allowed={0: [2]}) is None


def test_budget_raises_instead_of_answering():
    with pytest.raises(hs.SearchBudgetExhausted):
        hs.find_hom(clique(5), clique(4), budget=3)


def test_signature_mismatch_rejected():
    sig = st.Signature((("R", 1),))
    a = st.FiniteStructure(sig, (0,), {"R": []})
    with pytest.raises(st.StructureError):
        hs.find_hom(a, P2)
    assert not hs.is_hom(a, P2, {0: 0})


# --------------------------------------------------------- enumeration


def test_t2_has_only_the_identity_endomorphism():
    homs = list(hs.enumerate_homs(T2, T2))
    assert len(homs) == 1
    assert dict(homs[0].mapping) == {0: 0, 1: 1, 2: 2}


def test_isolated_vertex_into_k3():
    v = graph([], [0])
    assert len(list(hs.enumerate_homs(v, clique(3)))) == 3


def test_edge_into_k2():
    assert hs.count_homs(path(1), clique(2)) == 2


@settings(max_examples=60, deadline=None)
@given(small_graphs(3), small_graphs(3))
def test_enumeration_matches_brute_force(a, b):
    got = {tuple(sorted(h.mapping.items())) for h in hs.enumerate_homs(a, b)}
    want = {tuple(sorted(f.items())) for f in brute_homs(a, b)}
    assert got == want
    assert hs.count_homs(a, b) == len(want)


def test_enumeration_limit():
    with pytest.raises(hs.SizeGuardError):
        list(hs.enumerate_homs(graph([], [0, 1, 2]), clique(3), limit=5))


def test_hom_matrix_rows_are_homs():
    m = hs.hom_matrix(P2, T2)
    assert m.shape == (1, 3)
    assert m.tolist() == [[0, 1, 2]]


# --------------------------------------------------------------- powers


def test_power_of_t2_restricted_to_homs_has_one_element():
    p = hs.power(T2, T2, homs_only=True)
    assert p.domain == ((0, 1, 2),)


def test_power_elements_are_all_functions():
    p = hs.power(T2, T2)
    assert len(p) == 27
    looped = [x for x in p.domain if (x, x) in p.relations["E"]]
    assert looped == [(0, 1, 2)]


@pytest.mark.parametrize("b", [P2, T2, clique(2), clique(3)], ids=["P2", "T2", "K2", "K3"])
def test_projections_are_elements_of_power(b):
    sq = st.product(b, b)
    p = hs.power(b, sq, homs_only=True)
    pi1 = tuple(x for x, _ in sq.domain)
    pi2 = tuple(y for _, y in sq.domain)
    assert pi1 in p.index and pi2 in p.index


def test_power_size_guard():
    with pytest.raises(hs.SizeGuardError):
        hs.power(clique(3), clique(3), limit=10)


def test_loops_of_power_are_homomorphisms():
    for b in st.all_graphs(2):
        for c in st.all_graphs(2):
            p = hs.power(c, b)
            looped = {x for x in p.domain if (x, x) in p.relations["E"]}
            homs = {tuple(f[y] for y in b.domain) for f in brute_homs(b, c)}
            assert looped == homs


def test_currying_counts_on_sample():
    # the exhaustive version over all triples lives in the acceptance suite
    rnd = random.Random(7)
    corpus = st.all_graphs(3)
    for _ in range(40):
        a, b, c = (rnd.choice(corpus) for _ in range(3))
        lhs = graph_hom_counts(st.product(a, b))(c)
        rhs = counts_into(hs.power(c, b), [a])[0]
        assert lhs == rhs


def test_curry_round_trip_on_random_instances():
    rnd = random.Random(11)
    corpus = st.all_graphs(3)
    done = 0
    while done < 50:
        a, b, c = (rnd.choice(corpus) for _ in range(3))
        homs = brute_homs(st.product(a, b), c)
        if not homs:
            continue
        f = hs.HomMap(st.product(a, b), c, rnd.choice(homs))
        g = hs.curry(f, a, b)
        assert g.is_valid()
        back = hs.uncurry(g, a, b, c)
        assert dict(back.mapping) == dict(f.mapping)
        assert back.is_valid()
        done += 1


# ---------------------------------------------------------------- cores

EIGHT = graph([("a", "b"), ("b", "e"), ("f", "b"), ("b", "c"), ("f", "c"), ("g", "f"),
              ("c", "g"), ("d", "c"), ("g", "d"), ("d", "h")], "abcdefgh")


def test_core_of_eight_vertex_graph():
    c = hs.core(EIGHT)
    assert c.domain == ("b", "c", "f", "g")
    assert hs.is_core(c)


def test_core_of_p2_plus_edge():
    c = hs.core(st.disjoint_union(P2, path(1)))
    assert st.is_isomorphic(c, P2)


def test_t2_is_rigid():
    assert hs.is_rigid(T2)
    assert not hs.is_rigid(clique(2))


def test_retraction_fixes_core():
    c = hs.core(EIGHT)
    r = hs.retraction(EIGHT, c)
    assert r is not None
    assert all(r[x] == x for x in c.domain)


@settings(max_examples=60, deadline=None)
@given(small_graphs(4))
def test_core_properties(a):
    c = hs.core(a)
    assert len(c) == brute_core_size(a)
    assert hs.find_hom(a, c) is not None and hs.find_hom(c, a) is not None
    assert st.is_isomorphic(hs.core(c), c)
    assert hs.is_core(c)


@settings(max_examples=40, deadline=None)
@given(small_graphs(4), small_graphs(3))
def test_minimal_failing_substructure_exists(a, b):
    # a finite source fails to map exactly when some induced substructure fails
    if hs.find_hom(a, b) is not None:
        return
    current = a
    shrunk = True
    while shrunk:
        shrunk = False
        for x in current.domain:
            smaller = current.induced(y for y in current.domain if y != x)
            if hs.find_hom(smaller, b) is None:
                current, shrunk = smaller, True
                break
    assert hs.find_hom(current, b) is None
    assert len(current) <= len(a)
    for x in current.domain:
        assert hs.find_hom(current.induced(y for y in current.domain if y != x), b) is not None
