"""Homomorphism search, enumeration, powers and cores for finite structures.

Search is a backtracking solver over element domains kept hyperarc
consistent: after every assignment each tuple constraint is revised until no
candidate image loses support.  Domains are held as integer bitmasks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .structures import FiniteStructure, StructureError, product


class SearchBudgetExhausted(RuntimeError):
    """The search hit its node budget before reaching a verdict."""


class SizeGuardError(RuntimeError):
    """A construction would exceed its configured size limit."""


@dataclass(frozen=True)
class HomMap:
    source: FiniteStructure
    target: FiniteStructure
    mapping: Mapping

    def __getitem__(self, x):
        return self.mapping[x]

    def __call__(self, x):
        return self.mapping[x]

    def image(self) -> set:
        return set(self.mapping.values())

    def is_valid(self) -> bool:
        return is_hom(self.source, self.target, self.mapping)


def is_hom(a: FiniteStructure, b: FiniteStructure, mapping: Mapping) -> bool:
    if a.signature != b.signature:
        return False
    bset = set(b.domain)
    if any(x not in mapping or mapping[x] not in bset for x in a.domain):
        return False
    for name in a.signature.names:
        rb = b.relations[name]
        for t in a.relations[name]:
            if tuple(mapping[x] for x in t) not in rb:
                return False
    return True


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _bits(x: int):
    i = 0
    while x:
        if x & 1:
            yield i
        x >>= 1
        i += 1


class _Problem:
    """Integer-indexed view of a homomorphism instance."""

    def __init__(self, a: FiniteStructure, b: FiniteStructure, allowed: Mapping | None = None):
        if a.signature != b.signature:
            raise StructureError("source and target signatures differ")
        self.a, self.b = a, b
        ai, bi = a.index, b.index
        self.n, self.m = len(a.domain), len(b.domain)
        full = (1 << self.m) - 1
        self.init = [full] * self.n
        if allowed:
            for x, ys in allowed.items():
                mask = 0
                for y in ys:
                    mask |= 1 << bi[y]
                self.init[ai[x]] &= mask
        self.constraints = []
        target = {name: [tuple(bi[y] for y in t) for t in b.relations[name]] for name in b.signature.names}
        seen = set()
        for name in a.signature.names:
            for t in a.relations[name]:
                key = (name, tuple(ai[x] for x in t))
                if key in seen:
                    continue
                seen.add(key)
                self.constraints.append((key[1], target[name]))
        self.watch = [[] for _ in range(self.n)]
        for c, (scope, _) in enumerate(self.constraints):
            for v in set(scope):
                self.watch[v].append(c)

    def propagate(self, dom: list, queue) -> bool:
        pending = list(queue)
        queued = set(pending)
        while pending:
            c = pending.pop()
            queued.discard(c)
            scope, rel = self.constraints[c]
            new = [0] * len(scope)
            for t in rel:
                ok = True
                for v, y in zip(scope, t):
                    if not dom[v] >> y & 1:
                        ok = False
                        break
                if ok:
                    for i, y in enumerate(t):
                        new[i] |= 1 << y
            # a repeated variable must take one value in all its positions
            support = {}
            for v, mask in zip(scope, new):
                support[v] = support.get(v, dom[v]) & mask
            for v, mask in support.items():
                if mask != dom[v]:
                    if not mask:
                        return False
                    dom[v] = mask
                    for d in self.watch[v]:
                        if d not in queued:
                            queued.add(d)
                            pending.append(d)
        return True

    def solve(self, budget: int | None = None) -> Iterator[list]:
        dom = list(self.init)
        if any(d == 0 for d in dom):
            return
        if not self.propagate(dom, range(len(self.constraints))):
            return
        nodes = [0]

        def rec(dom):
            free = [v for v in range(self.n) if dom[v] & (dom[v] - 1)]
            if not free:
                yield [next(_bits(d)) for d in dom]
                return
            v = min(free, key=lambda u: (_popcount(dom[u]), u))
            for y in _bits(dom[v]):
                nodes[0] += 1
                if budget is not None and nodes[0] > budget:
                    raise SearchBudgetExhausted(f"no verdict within {budget} search nodes")
                child = list(dom)
                child[v] = 1 << y
                if self.propagate(child, self.watch[v]):
                    yield from rec(child)

        yield from rec(dom)

    def to_map(self, sol) -> dict:
        return {x: self.b.domain[y] for x, y in zip(self.a.domain, sol)}


def find_hom(a: FiniteStructure, b: FiniteStructure, budget: int | None = None,
             allowed: Mapping | None = None) -> HomMap | None:
    """Return a homomorphism ``a -> b`` or ``None`` when none exists.

    ``allowed`` optionally restricts the images of some elements.  If
    ``budget`` search nodes are used up, ``SearchBudgetExhausted`` is raised
    rather than reporting a negative answer.
    """
    prob = _Problem(a, b, allowed)
    for sol in prob.solve(budget):
        return HomMap(a, b, prob.to_map(sol))
    return None


def hom_exists(a, b, budget=None) -> bool:
    return find_hom(a, b, budget) is not None


def enumerate_homs(a: FiniteStructure, b: FiniteStructure, limit: int | None = None) -> Iterator[HomMap]:
    """Yield every homomorphism ``a -> b`` exactly once."""
    prob = _Problem(a, b)
    for count, sol in enumerate(prob.solve(), start=1):
        if limit is not None and count > limit:
            raise SizeGuardError(f"more than {limit} homomorphisms")
        yield HomMap(a, b, prob.to_map(sol))


def count_homs(a: FiniteStructure, b: FiniteStructure) -> int:
    prob = _Problem(a, b)
    return sum(1 for _ in prob.solve())


def hom_matrix(b: FiniteStructure, c: FiniteStructure, limit: int = 10 ** 6) -> np.ndarray:
    """All homomorphisms ``b -> c`` as rows of target indices, one column per element of ``b``."""
    prob = _Problem(b, c)
    rows = []
    for sol in prob.solve():
        rows.append(sol)
        if len(rows) > limit:
            raise SizeGuardError(f"|Hom(B, C)| exceeds the guard of {limit}")
    return np.array(rows, dtype=np.int64).reshape(len(rows), len(b.domain))


def power_relation(c: FiniteStructure, b: FiniteStructure, homs: np.ndarray, name: str,
                   cells: int = 10 ** 8) -> list[tuple]:
    """Index tuples of the relation ``name`` in the power structure with elements ``homs``."""
    k = c.signature.arity(name)
    n = len(homs)
    if n ** k > cells:
        raise SizeGuardError(f"relation {name} of the power would need {n ** k} cells")
    cmat = np.zeros((len(c.domain),) * k, dtype=bool)
    ci = c.index
    for t in c.relations[name]:
        cmat[tuple(ci[y] for y in t)] = True
    ok = np.ones((n,) * k, dtype=bool)
    bi = b.index
    for t in b.relations[name]:
        idx = []
        for pos, y in enumerate(t):
            shape = [1] * k
            shape[pos] = n
            idx.append(homs[:, bi[y]].reshape(shape))
        ok &= cmat[tuple(idx)]
    return [tuple(int(i) for i in t) for t in np.argwhere(ok)]


def all_maps_matrix(b: FiniteStructure, c: FiniteStructure, limit: int = 10 ** 6) -> np.ndarray:
    """Every function ``b -> c`` as rows of target indices, in lexicographic order."""
    n, m = len(b.domain), len(c.domain)
    if m ** n > limit:
        raise SizeGuardError(f"{m}^{n} functions exceed the guard of {limit}")
    rows = list(itertools.product(range(m), repeat=n))
    return np.array(rows, dtype=np.int64).reshape(len(rows), n)


def power(c: FiniteStructure, b: FiniteStructure, limit: int = 10 ** 6,
          homs_only: bool = False) -> FiniteStructure:
    """The power structure ``c^b``.

    Its elements are the functions ``b -> c``, each written as the tuple of
    its images in the domain order of ``b``.  A tuple of functions is in
    ``R`` when applying them coordinatewise to any ``R``-tuple of ``b`` lands
    in ``R`` of ``c``.  With these elements ``a x b -> c`` and ``a -> c^b``
    correspond bijectively, and the elements carrying a loop in every
    relation are exactly the homomorphisms.  ``homs_only`` keeps just those,
    the induced substructure on ``Hom(b, c)``.
    """
    if c.signature != b.signature:
        raise StructureError("signatures differ")
    homs = hom_matrix(b, c, limit) if homs_only else all_maps_matrix(b, c, limit)
    elems = tuple(tuple(c.domain[j] for j in row) for row in homs.tolist())
    rels = {name: [tuple(elems[i] for i in t) for t in power_relation(c, b, homs, name)]
            for name in c.signature.names}
    return FiniteStructure(c.signature, elems, rels)


def curry(f: HomMap, a: FiniteStructure, b: FiniteStructure, p: FiniteStructure | None = None) -> HomMap:
    """Turn ``f: a x b -> c`` into ``a -> c^b``."""
    if p is None:
        p = power(f.target, b)
    g = {x: tuple(f[(x, y)] for y in b.domain) for x in a.domain}
    return HomMap(a, p, g)


def uncurry(g: HomMap, a: FiniteStructure, b: FiniteStructure, c: FiniteStructure) -> HomMap:
    """Turn ``g: a -> c^b`` into ``a x b -> c``."""
    pos = b.index
    f = {(x, y): g[x][pos[y]] for x in a.domain for y in b.domain}
    return HomMap(product(a, b), c, f)


# -------------------------------------------------------------------- cores


def _shrink(a: FiniteStructure) -> FiniteStructure:
    current = a
    changed = True
    while changed:
        changed = False
        for x in current.domain:
            smaller = current.induced(y for y in current.domain if y != x)
            h = find_hom(current, smaller)
            if h is not None:
                current = current.induced(h.image())
                changed = True
                break
    return current


def core(a: FiniteStructure) -> FiniteStructure:
    """The core of ``a`` as an induced substructure.

    Among all induced substructures of core size, the one whose element
    set comes first lexicographically (in the domain order of ``a``) and
    receives a homomorphism from ``a`` is returned.
    """
    if not a.domain:
        return a
    size = len(_shrink(a))
    for subset in itertools.combinations(a.domain, size):
        sub = a.induced(subset)
        if find_hom(a, sub) is not None:
            return sub
    raise AssertionError("unreachable: the shrunken core is itself a candidate")


def is_core(a: FiniteStructure) -> bool:
    """True when every endomorphism is surjective."""
    for x in a.domain:
        if find_hom(a, a.induced(y for y in a.domain if y != x)) is not None:
            return False
    return True


def retraction(a: FiniteStructure, sub: FiniteStructure) -> HomMap | None:
    """A homomorphism ``a -> sub`` fixing ``sub`` pointwise, if there is one."""
    return find_hom(a, sub, allowed={x: [x] for x in sub.domain})


def is_rigid(a: FiniteStructure) -> bool:
    """True when the identity is the only endomorphism."""
    homs = enumerate_homs(a, a)
    next(homs)
    return next(homs, None) is None
