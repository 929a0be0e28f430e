"""Tree duality, finite duality and hyperedge consistency for finite targets."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import structures as st
from .homset import HomMap, SizeGuardError, find_hom, hom_matrix
from .structures import FiniteStructure, Signature, StructureError

GuessFunction = Mapping  # element -> frozenset of target elements


# ---------------------------------------------------------- Feder-Vardi


def subset_order(b: FiniteStructure) -> list[frozenset]:
    """Nonempty subsets of the domain of ``b``, by size then by element order."""
    out = []
    for r in range(1, len(b.domain) + 1):
        out.extend(frozenset(c) for c in itertools.combinations(b.domain, r))
    return out


def feder_vardi(b: FiniteStructure) -> FiniteStructure:
    """The power-set structure over the nonempty subsets of ``b``.

    ``(Y1, ..., Yk)`` is in ``R`` when for every position ``i`` and every
    ``y`` in ``Yi`` there is an ``R``-tuple of ``b`` with ``y`` at ``i`` and
    every other entry ``j`` drawn from ``Yj``.
    """
    subsets = subset_order(b)
    bi = b.index
    masks = [sum(1 << bi[y] for y in s) for s in subsets]
    rels = {}
    for name, k in b.signature.predicates:
        rel = [tuple(bi[y] for y in t) for t in b.relations[name]]
        found = []
        for combo in itertools.product(range(len(subsets)), repeat=k):
            ms = [masks[c] for c in combo]
            support = [0] * k
            for t in rel:
                if all(ms[j] >> t[j] & 1 for j in range(k)):
                    for j in range(k):
                        support[j] |= 1 << t[j]
            if support == ms:
                found.append(tuple(subsets[c] for c in combo))
        rels[name] = found
    return FiniteStructure(b.signature, tuple(subsets), rels)


def has_tree_duality(b: FiniteStructure) -> tuple[bool, HomMap | None]:
    """Decide tree duality; the witness is a homomorphism from the Feder-Vardi structure."""
    g = find_hom(feder_vardi(b), b)
    return g is not None, g


# ------------------------------------------------------ hyperedge consistency


def top(a: FiniteStructure, b: FiniteStructure) -> dict:
    full = frozenset(b.domain)
    return {x: full for x in a.domain}


def hc_step(a: FiniteStructure, b: FiniteStructure, f: GuessFunction, _tables=None) -> dict:
    """One application of the consistency operator.

    An element ``y`` stays in ``F(x)`` when every completion of ``x`` at
    every position of every predicate can be matched by a completion of
    ``y`` at the same position whose entries lie in the current guesses.
    """
    adj_a, adj_b = _tables or (st.adjacency_table(a), st.adjacency_table(b))
    out = {}
    for x in a.domain:
        keep = set()
        for y in f[x]:
            ok = True
            for name, k in a.signature.predicates:
                for i in range(k):
                    choices = adj_b[(y, name, i)]
                    for rest in adj_a[(x, name, i)]:
                        if not any(all(yy in f[xx] for xx, yy in zip(rest, c)) for c in choices):
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if ok:
                keep.add(y)
        out[x] = frozenset(keep)
    return out


@dataclass
class HCRun:
    """The full sequence ``F0 = top, F1, ..., Fn`` with ``Fn`` the greatest fixpoint."""

    steps: list = field(default_factory=list)

    @property
    def fixpoint(self) -> dict:
        return self.steps[-1]

    @property
    def fixpoint_step(self) -> int:
        """Least ``n`` with ``F(n+1) = F(n)``."""
        return len(self.steps) - 1

    @property
    def first_empty_step(self) -> int | None:
        for n, f in enumerate(self.steps):
            if any(not v for v in f.values()):
                return n
        return None

    @property
    def all_empty_step(self) -> int | None:
        for n, f in enumerate(self.steps):
            if f and all(not v for v in f.values()):
                return n
        return None

    def consistent(self) -> bool:
        return all(self.fixpoint.values())


def hc_fixpoint(a: FiniteStructure, b: FiniteStructure, max_steps: int | None = None) -> HCRun:
    """Iterate the operator from ``top`` until it stabilises."""
    if a.signature != b.signature:
        raise StructureError("signatures differ")
    tables = (st.adjacency_table(a), st.adjacency_table(b))
    run = HCRun([top(a, b)])
    while max_steps is None or len(run.steps) <= max_steps:
        nxt = hc_step(a, b, run.steps[-1], tables)
        if nxt == run.steps[-1]:
            return run
        run.steps.append(nxt)
    return run


@dataclass(frozen=True)
class HCVerdict:
    consistent: bool
    sound: bool
    run: HCRun

    @property
    def answer(self) -> bool | None:
        """Whether a homomorphism exists, or ``None`` if consistency cannot tell."""
        if not self.consistent:
            return False
        return True if self.sound else None


def hc_decides(a: FiniteStructure, b: FiniteStructure, tree_duality: bool | None = None) -> HCVerdict:
    """Run consistency and mark the verdict unsound when ``b`` lacks tree duality.

    An empty fixpoint always refutes a homomorphism; a nonempty one only
    proves it for targets with tree duality.
    """
    if tree_duality is None:
        tree_duality = has_tree_duality(b)[0]
    run = hc_fixpoint(a, b)
    return HCVerdict(run.consistent(), tree_duality, run)


# ------------------------------------------------------------ linkedness


def one_linked(b: FiniteStructure, x, y) -> bool:
    """Every tuple with entries in ``{x, y}`` lies in every relation."""
    for name, k in b.signature.predicates:
        rel = b.relations[name]
        for t in itertools.product((x, y), repeat=k):
            if t not in rel:
                return False
    return True


@dataclass(frozen=True)
class LinkedAnalysis:
    reflexive: tuple
    one_linked: frozenset  # unordered pairs of distinct elements
    classes: tuple  # linked classes of reflexive elements

    def linked(self, x, y) -> bool:
        return any(x in c and y in c for c in self.classes)


def linked_analysis(b: FiniteStructure) -> LinkedAnalysis:
    refl = tuple(x for x in b.domain if one_linked(b, x, x))
    pairs = frozenset(frozenset((x, y)) for x, y in itertools.combinations(refl, 2) if one_linked(b, x, y))
    parent = {x: x for x in refl}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in pairs:
        x, y = tuple(p)
        parent[find(x)] = find(y)
    groups = {}
    for x in refl:
        groups.setdefault(find(x), []).append(x)
    return LinkedAnalysis(refl, pairs, tuple(tuple(g) for g in groups.values()))


def _linked_in_power(b: FiniteStructure, source: FiniteStructure, homs: np.ndarray, start: int, goal: int) -> bool:
    """Breadth-first search for a chain of one-linked homomorphisms ``source -> b``."""
    checks = []
    si, bi = source.index, b.index
    for name, k in b.signature.predicates:
        tensor = np.zeros((len(b.domain),) * k, dtype=bool)
        for t in b.relations[name]:
            tensor[tuple(bi[y] for y in t)] = True
        cols = np.array([[si[x] for x in t] for t in source.relations[name]], dtype=np.int64).reshape(-1, k)
        patterns = [p for p in itertools.product((0, 1), repeat=k) if 0 < sum(p) < k]
        checks.append((tensor, cols, patterns))

    def linked_to(f, candidates):
        ok = np.ones(len(candidates), dtype=bool)
        sub = homs[candidates]
        for tensor, cols, patterns in checks:
            if not len(cols):
                continue
            for p in patterns:
                idx = tuple(sub[:, cols[:, j]] if p[j] else homs[f, cols[:, j]][None, :] for j in range(len(p)))
                ok &= tensor[idx].all(axis=1)
        return candidates[ok]

    seen = np.zeros(len(homs), dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        f = queue.popleft()
        if f == goal:
            return True
        nxt = linked_to(f, np.flatnonzero(~seen))
        seen[nxt] = True
        queue.extend(nxt.tolist())
    return False


def has_finite_duality(b: FiniteStructure, limit: int = 10 ** 6) -> bool:
    """Decide finite duality for a core ``b``.

    Unary signatures always have it.  Otherwise the two projections of
    ``b x b`` are tested for being linked inside the power ``b^(b x b)``.
    Raises ``SizeGuardError`` when ``|Hom(b x b, b)|`` exceeds ``limit``.
    """
    if b.signature.is_unary():
        return True
    sq = st.product(b, b)
    homs = hom_matrix(sq, b, limit)
    bi = b.index
    pi1 = [bi[x] for x, _ in sq.domain]
    pi2 = [bi[y] for _, y in sq.domain]
    rows = {tuple(r): i for i, r in enumerate(homs.tolist())}
    return _linked_in_power(b, sq, homs, rows[tuple(pi1)], rows[tuple(pi2)])


# ------------------------------------------------------------ obstructions


def is_obstruction(d: FiniteStructure, b: FiniteStructure) -> bool:
    return find_hom(d, b) is None


def is_critical_obstruction(d: FiniteStructure, b: FiniteStructure) -> bool:
    """``d`` does not map to ``b`` but every maximal proper substructure does."""
    if find_hom(d, b) is not None:
        return False
    for name, t in d.all_tuples():
        if find_hom(d.without_tuple(name, t), b) is None:
            return False
    for x in d.domain:
        if find_hom(d.induced(y for y in d.domain if y != x), b) is None:
            return False
    return True


def _extensions(sig: Signature, n: int, present: frozenset, max_vertices: int):
    """New tuples touching the current elements, using fresh elements in order."""
    for name, k in sig.predicates:
        for t in itertools.product(range(n + k), repeat=k):
            fresh = [x for x in dict.fromkeys(t) if x >= n]
            if fresh != list(range(n, n + len(fresh))):
                continue
            if n and len(fresh) == len(set(t)):
                continue
            if n + len(fresh) > max_vertices or (name, t) in present:
                continue
            yield name, t, n + len(fresh)


def critical_obstructions(b: FiniteStructure, max_vertices: int, max_tuples: int,
                          limit: int = 10 ** 6) -> list[FiniteStructure]:
    """Connected critical obstructions of ``b`` within the bounds, up to isomorphism.

    Every connected structure can be built by adding one tuple at a time
    while staying connected, and every such intermediate step of a critical
    obstruction maps to ``b``.  So only structures mapping to ``b`` are
    extended, and each candidate that fails to map is tested for criticality.
    """
    sig = b.signature
    found, seen = {}, set()
    level = [(0, frozenset())]
    for _ in range(max_tuples):
        nxt = []
        for n, present in level:
            for name, t, n2 in _extensions(sig, n, present, max_vertices):
                tuples = present | {(name, t)}
                rels = {p: [u for q, u in tuples if q == p] for p in sig.names}
                d = FiniteStructure(sig, tuple(range(n2)), rels)
                form = st.canonical_form(d)
                if form in seen:
                    continue
                seen.add(form)
                if len(seen) > limit:
                    raise SizeGuardError(f"more than {limit} candidate structures")
                if find_hom(d, b) is not None:
                    nxt.append((n2, tuples))
                elif is_critical_obstruction(d, b):
                    found[form] = d
        level = nxt
    return sorted(found.values(), key=lambda d: (len(d), d.n_tuples(), st.canonical_form(d)))


def verify_dual(b: FiniteStructure, duals: Iterable[FiniteStructure], corpus: Iterable[FiniteStructure]):
    """Check ``A -> b`` iff no dual member maps to ``A``, on every corpus member.

    Returns the first counterexample, or ``None`` when the corpus agrees.
    """
    duals = list(duals)
    for a in corpus:
        maps = find_hom(a, b) is not None
        blocked = any(find_hom(d, a) is not None for d in duals)
        if maps == blocked:
            return a
    return None


def unary_dual(b: FiniteStructure) -> list[FiniteStructure]:
    """Finite dual of a structure over unary predicates only.

    A single element carrying the predicate set ``tau`` maps to ``b`` when
    some element of ``b`` carries all of ``tau``.  The minimal sets that
    fail this form a dual.
    """
    sig = b.signature
    if not sig.is_unary():
        raise StructureError("unary_dual needs a unary signature")
    types = [frozenset(p for p in sig.names if (x,) in b.relations[p]) for x in b.domain]
    obstructing = [frozenset(c) for r in range(len(sig.names) + 1)
                   for c in itertools.combinations(sig.names, r)
                   if not any(frozenset(c) <= ty for ty in types)]
    minimal = [t for t in obstructing if not any(u < t for u in obstructing)]
    return [st.unary_singleton(t, sig) for t in minimal]
