import itertools

import pytest
from hypothesis import given, settings, strategies as hst

from autocsp import autohom as ah
from autocsp import automata as au
from autocsp import presentations as pr
from autocsp import structures as st
from autocsp import textio
from autocsp.structures import clique, graph, path, transitive_tournament, zigzag
from autocsp.textio import FormatError

T2 = transitive_tournament(2)
K2 = clique(2)


@hst.composite
def small_graphs(draw, max_v=4):
    n = draw(hst.integers(1, max_v))
    pairs = list(itertools.product(range(n), repeat=2))
    es = draw(hst.lists(hst.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return graph(es, range(n))


def _names(a):
    """Relabel to the string names the parser produces."""
    return a.relabel({x: textio.element_name(x) for x in a.domain})


# -------------------------------------------------------------- structures


def test_structure_text_layout():
    assert textio.format_structure(path(2)) == "signature E/2\ndomain 0 1 2\nE 0 1\nE 1 2\n"


@settings(max_examples=60, deadline=None)
@given(small_graphs())
def test_structure_round_trip(a):
    a = _names(a)
    assert textio.parse_structure(textio.format_structure(a)) == a


def test_structure_with_several_predicates():
    sig = st.Signature((("E", 2), ("P", 1), ("R", 3)))
    a = st.FiniteStructure(sig, ("a", "b"), {"E": [("a", "b")], "P": [("b",)], "R": [("a", "a", "b")]})
    assert textio.parse_structure(textio.format_structure(a)) == a


def test_tuple_elements_are_spelled_out():
    p = _names(st.product(path(1), path(1)))
    assert "(0,1)" in p.domain
    assert textio.parse_structure(textio.format_structure(p)) == p


def test_comments_and_blank_lines_are_skipped():
    text = "# a comment\n\nsignature E/2\ndomain x y\n  # indented comment\nE x y\n"
    assert textio.parse_structure(text) == graph([("x", "y")])


@pytest.mark.parametrize("text,line,column,needle", [
    ("signature E/2\ndomain a b\nE a c\n", 3, 5, "not in the domain"),
    ("signature E/2\ndomain a b\nE a\n", 3, 1, "expects 2 arguments"),
    ("signature E/2\ndomain a b\nF a b\n", 3, 1, "unknown predicate"),
    ("signature E2\n", 1, 11, "bad predicate"),
    ("domain a b\nE a b\nsignature E/2\n", 2, 1, "must follow"),
    ("signature E/2\ndomain a a\n", 2, 1, "repeated"),
])
def test_structure_errors_carry_positions(text, line, column, needle):
    with pytest.raises(FormatError) as e:
        textio.parse_structure(text, "x.struct")
    assert (e.value.line, e.value.column) == (line, column)
    assert needle in str(e.value)
    assert str(e.value).startswith(f"x.struct:{line}:{column}:")


def test_missing_header_lines():
    with pytest.raises(FormatError, match="missing signature"):
        textio.parse_structure("domain a\n")
    with pytest.raises(FormatError, match="missing domain"):
        textio.parse_structure("signature E/2\n")


# --------------------------------------------------------------- automata


def test_automaton_round_trip_on_builtins():
    for name, make in pr.BUILTINS.items():
        p = make()
        for a in [p.domain, *p.relations.values()]:
            back = textio.parse_automaton(textio.format_automaton(a))
            assert au.canonical(back) == au.canonical(a), name


@settings(max_examples=40, deadline=None)
@given(hst.lists(hst.tuples(hst.text("ab", max_size=3), hst.text("ab", max_size=3)), max_size=6))
def test_finite_relation_round_trip(pairs):
    a = au.from_tuples(("a", "b"), 2, [(tuple(u), tuple(v)) for u, v in pairs])
    back = textio.parse_automaton(textio.format_automaton(a))
    assert au.equivalent(back, a)


def test_nondeterministic_input_is_determinised():
    text = """arity 1
alphabet a b
state p initial
state q accepting
trans p (a) p
trans p (a) q
trans p (b) p
"""
    a = textio.parse_automaton(text)
    assert a.accepts([("b", "a")]) and not a.accepts([("a", "b")])


def test_unpadded_letters_may_omit_parentheses_in_arity_one():
    text = "arity 1\nalphabet a\nstate s initial accepting\ntrans s a s\n"
    assert textio.parse_automaton(text).accepts([("a", "a")])


@pytest.mark.parametrize("text,line,needle", [
    ("arity 2\nalphabet a\nstate s initial\ntrans s (a) s\n", 4, "expected 2"),
    ("arity 1\nalphabet a\nstate s initial\ntrans s (c) s\n", 4, "not in the alphabet"),
    ("arity 1\nalphabet a\nstate s initial\ntrans s (a) t\n", 4, "unknown state"),
    ("arity 2\nalphabet a\nstate s initial\ntrans s (#,#) s\n", 4, "padding only"),
    ("arity 1\nalphabet a #\n", 2, "reserved"),
    ("arity 1\nalphabet a\nstate s initial\nstate s\n", 4, "duplicate state"),
    ("arity 1\nalphabet a\nstate s bogus\n", 3, "unknown state attribute"),
    ("arity 1\nalphabet a\nwobble\n", 3, "unknown directive"),
])
def test_automaton_errors_carry_positions(text, line, needle):
    with pytest.raises(FormatError) as e:
        textio.parse_automaton(text)
    assert e.value.line == line and e.value.column is not None
    assert needle in str(e.value)


def test_automaton_without_initial_state():
    with pytest.raises(FormatError, match="no initial state"):
        textio.parse_automaton("arity 1\nalphabet a\nstate s\n")


# ------------------------------------------------------ classifiers, colorings


def test_classifier_round_trip():
    res = ah.hc_auto(pr.infinite_matching(), transitive_tournament(1))
    c = res.classifier.relabel(lambda lab: frozenset(str(y) for y in lab))
    assert textio.parse_classifier(textio.format_classifier(c)) == c


def test_classifier_text_has_labels():
    c = ah.top_classifier(pr.binary_tree(), T2)
    assert "label {0,1,2}" in textio.format_classifier(c)


def test_classifier_must_be_unary():
    text = textio.format_automaton(au.equality(("a",)))
    with pytest.raises(FormatError, match="arity 1"):
        textio.parse_classifier(text)


def test_coloring_round_trip():
    p = pr.binary_tree()
    found = ah.enumerate_reghom_semi(p, K2).coloring
    back = textio.parse_coloring(textio.format_coloring(found))
    assert set(back.classes) == {"0", "1"}
    for y in K2.domain:
        assert au.equivalent(back.classes[str(y)], found.classes[y])


# ----------------------------------------------------------- presentations


@pytest.mark.parametrize("name", sorted(pr.BUILTINS))
def test_presentation_round_trip(name):
    p = pr.BUILTINS[name]()
    back = textio.parse_presentation(textio.format_presentation(p))
    assert back.signature == p.signature and back.alphabet == p.alphabet
    assert au.equivalent(back.domain, p.domain)
    for r in p.signature.names:
        assert au.equivalent(back.relations[r], p.relations[r])


def test_presentation_from_finite_round_trip():
    p = pr.from_finite(zigzag(2))
    back = textio.parse_presentation(textio.format_presentation(p))
    # element names are not written out, so the parsed side is named by words
    assert pr.to_finite(back) == zigzag(2).relabel({x: pr.element_word(x) for x in range(8)})


def test_presentation_loads_automata_by_path(tmp_path):
    p = pr.infinite_path()
    (tmp_path / "dom.aut").write_text(textio.format_automaton(p.domain))
    (tmp_path / "edge.aut").write_text(textio.format_automaton(p.relations["E"]))
    text = "presentation\nsignature E/2\nalphabet a b\ndomain dom.aut\nrelation E edge.aut\n"
    back = textio.parse_presentation(text, base=tmp_path)
    assert pr.validate(back) == []
    assert au.equivalent(back.relations["E"], p.relations["E"])


def test_presentation_errors_point_into_blocks():
    text = "presentation\nsignature E/2\nalphabet a\ndomain\narity 1\nalphabet a\nstate s initial\ntrans s (z) s\nend\n"
    with pytest.raises(FormatError) as e:
        textio.parse_presentation(text, "bad.apres")
    assert e.value.line == 8
    assert "not in the alphabet" in str(e.value)


def test_presentation_needs_header_and_terminated_blocks():
    with pytest.raises(FormatError, match="header"):
        textio.parse_presentation("signature E/2\n")
    with pytest.raises(FormatError, match="unterminated"):
        textio.parse_presentation("presentation\nsignature E/2\ndomain\narity 1\n")


def test_sniff():
    assert textio.sniff(textio.format_structure(T2)) == "structure"
    assert textio.sniff(textio.format_presentation(pr.binary_tree())) == "presentation"
    assert textio.sniff(textio.format_automaton(au.equality(("a",)))) == "automaton"
    assert textio.sniff("# nothing\n") == "unknown"
