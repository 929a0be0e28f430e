"""Walk through the finite side: searches, cores, dualities and consistency traces.

Run with ``python3 demos/finite_targets.py``.
"""

from autocsp import duality as du
from autocsp import homset as hs
from autocsp import structures as st
from autocsp.structures import clique, path, transitive_tournament, zigzag

T2, P2, P3 = transitive_tournament(2), path(2), path(3)


def flags(guess, b):
    return " ".join("".join("1" if y in guess[x] else "0" for y in b.domain) for x in sorted(guess))


def main():
    z1 = zigzag(1)
    h = hs.find_hom(z1, T2)
    print("zigzag 1 -> T2:", dict(h.mapping))
    print("homomorphisms in total:", hs.count_homs(z1, T2))

    print("\nconsistency on zigzag 5 into T2")
    run = du.hc_fixpoint(zigzag(5), T2)
    for n, f in enumerate(run.steps):
        print(f"  step {n}: {flags(f, T2)}")

    print("\nconsistency on zigzag 5 into P2")
    run = du.hc_fixpoint(zigzag(5), P2)
    for n in (2, 3, 6, 7, 13):
        print(f"  step {n:2}: {flags(run.steps[n], P2)}")
    print(f"  first empty at {run.first_empty_step}, all empty at {run.all_empty_step}")

    fv = du.feder_vardi(P2)
    print(f"\nsubset structure of P2: {len(fv)} vertices, {len(fv.relations['E'])} edges")
    for b, name in ((P2, "P2"), (clique(2), "K2"), (T2, "T2")):
        print(f"  {name}: tree duality {du.has_tree_duality(b)[0]}, finite duality {du.has_finite_duality(b)}")

    obs = du.critical_obstructions(T2, 4, 4)
    print(f"\ncritical obstructions of T2 up to 4 vertices: {len(obs)}")
    print("  contains P3:", any(st.is_isomorphic(d, P3) for d in obs))
    print("  {P3} is a dual on graphs with <= 4 vertices:", du.verify_dual(T2, [P3], st.all_graphs(4)) is None)


if __name__ == "__main__":
    main()
