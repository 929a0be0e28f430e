"""Infinite sources given by synchronous automata.

Shows model checking, symbolic consistency, synthesis of a regular
homomorphism and the two semi-procedures on the builtin presentations.
Run with ``python3 demos/automatic_sources.py``.
"""

from autocsp import autohom as ah
from autocsp import presentations as pr
from autocsp import textio
from autocsp.structures import clique, transitive_tournament

T1, T2, K2 = transitive_tournament(1), transitive_tournament(2), clique(2)


def word(w):
    return "".join(w) or "ε"


def main():
    tree, matching = pr.binary_tree(), pr.infinite_matching()

    print("every node of the tree has a child:", pr.model_check(tree, "(forall x (exists y (E x y)))"))
    print("the tree has a loop:", pr.model_check(tree, "(exists x (E x x))"))

    res = ah.hc_auto(tree, T2)
    print(f"\ntree -> T2: no homomorphism, {word(res.word)} loses every image at round {res.round}")
    ref = ah.refute_hom_semi(tree, T2)
    print(f"obstruction found after {ref.examined} candidate(s):")
    print(textio.format_structure(ref.obstruction), end="")

    syn = ah.synth_regular_hom(matching, T1)
    print(f"\nmatching -> T1: fixpoint at round {syn.fixpoint.round}; coloring")
    for w in [(), ("a",), ("a", "a"), ("b",), ("b", "a")]:
        print(f"  {word(w):>4} -> {syn.coloring.color(w)}")
    print("checker:", bool(ah.check_regular_hom(matching, T1, syn.coloring)))

    found = ah.enumerate_reghom_semi(tree, K2)
    print(f"\ntree -> K2: coloring found after {found.examined} candidates")
    for w in [(), ("0",), ("1", "0"), ("0", "1", "1")]:
        print(f"  {word(w):>4} -> {found.coloring.color(w)}")
    print(textio.format_coloring(found.coloring), end="")


if __name__ == "__main__":
    main()
