"""Finite relational structures and the constructions built on them.

A structure is a finite ordered domain together with one finite relation per
predicate of its signature.  Elements can be any hashable values; the domain
order matters only where an operation promises a deterministic result
(cores, canonical forms, text output).
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np

Element = Hashable
Tuple = tuple


class StructureError(ValueError):
    """Raised when a structure or signature is malformed."""


@dataclass(frozen=True)
class Signature:
    """An ordered list of ``(name, arity)`` pairs."""

    predicates: tuple[tuple[str, int], ...]

    def __post_init__(self):
        preds = tuple((str(n), int(k)) for n, k in self.predicates)
        names = [n for n, _ in preds]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate predicate names in {names}")
        for n, k in preds:
            if k < 1:
                raise StructureError(f"predicate {n} must have arity >= 1, got {k}")
        object.__setattr__(self, "predicates", preds)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.predicates)

    def arity(self, name: str) -> int:
        for n, k in self.predicates:
            if n == name:
                return k
        raise StructureError(f"unknown predicate {name!r}")

    def __contains__(self, name) -> bool:
        return name in self.names

    def is_unary(self) -> bool:
        return all(k == 1 for _, k in self.predicates)

    def extend(self, extra: Iterable[tuple[str, int]]) -> "Signature":
        return Signature(self.predicates + tuple(extra))

    def __str__(self):
        return " ".join(f"{n}/{k}" for n, k in self.predicates)


GRAPH = Signature((("E", 2),))


@dataclass(frozen=True, eq=False)
class FiniteStructure:
    """A finite relational structure.

    ``relations`` maps each predicate name to a frozenset of tuples over
    ``domain``.  Construction validates arities and membership.
    """

    signature: Signature
    domain: tuple
    relations: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        dom = tuple(self.domain)
        if len(set(dom)) != len(dom):
            raise StructureError("domain contains repeated elements")
        members = set(dom)
        rels = {}
        for name, k in self.signature.predicates:
            tuples = frozenset(tuple(t) for t in self.relations.get(name, ()))
            for t in tuples:
                if len(t) != k:
                    raise StructureError(f"tuple {t} has wrong arity for {name}/{k}")
                for x in t:
                    if x not in members:
                        raise StructureError(f"tuple {t} of {name} leaves the domain")
            rels[name] = tuples
        extra = set(self.relations) - set(self.signature.names)
        if extra:
            raise StructureError(f"relations for undeclared predicates {sorted(extra)}")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "relations", rels)

    def __len__(self):
        return len(self.domain)

    def __iter__(self):
        return iter(self.domain)

    def __eq__(self, other):
        if not isinstance(other, FiniteStructure):
            return NotImplemented
        return (self.signature == other.signature and set(self.domain) == set(other.domain)
                and self.relations == other.relations)

    def __hash__(self):
        return hash((self.signature, frozenset(self.domain),
                     frozenset(self.relations.items())))

    def __repr__(self):
        parts = ", ".join(f"{n}:{len(self.relations[n])}" for n in self.signature.names)
        return f"FiniteStructure(|A|={len(self.domain)}, {parts})"

    @property
    def index(self) -> dict:
        idx = self.__dict__.get("_index")
        if idx is None:
            idx = {x: i for i, x in enumerate(self.domain)}
            object.__setattr__(self, "_index", idx)
        return idx

    def tuples(self, name: str) -> frozenset:
        return self.relations[name]

    def all_tuples(self):
        """Yield ``(name, tuple)`` for every tuple, in signature order."""
        for name in self.signature.names:
            for t in sorted(self.relations[name], key=self._tuple_key):
                yield name, t

    def _tuple_key(self, t):
        idx = self.index
        return tuple(idx[x] for x in t)

    def n_tuples(self) -> int:
        return sum(len(r) for r in self.relations.values())

    def induced(self, subset: Iterable) -> "FiniteStructure":
        keep = set(subset)
        dom = tuple(x for x in self.domain if x in keep)
        rels = {n: [t for t in ts if all(x in keep for x in t)] for n, ts in self.relations.items()}
        return FiniteStructure(self.signature, dom, rels)

    def without_tuple(self, name: str, t: tuple) -> "FiniteStructure":
        rels = dict(self.relations)
        rels[name] = self.relations[name] - {tuple(t)}
        return FiniteStructure(self.signature, self.domain, rels)

    def relabel(self, mapping: Mapping) -> "FiniteStructure":
        """Rename elements through an injective ``mapping``."""
        dom = tuple(mapping[x] for x in self.domain)
        rels = {n: [tuple(mapping[x] for x in t) for t in ts] for n, ts in self.relations.items()}
        return FiniteStructure(self.signature, dom, rels)

    def integer_labels(self) -> "FiniteStructure":
        return self.relabel({x: i for i, x in enumerate(self.domain)})

    def restrict_signature(self, signature: Signature) -> "FiniteStructure":
        return FiniteStructure(signature, self.domain, {n: self.relations[n] for n in signature.names})


def graph(edges: Iterable[tuple], domain: Iterable | None = None) -> FiniteStructure:
    """Build a digraph over the signature ``E/2``."""
    edges = [tuple(e) for e in edges]
    if domain is None:
        seen = {}
        for e in edges:
            for x in e:
                seen.setdefault(x, None)
        domain = list(seen)
    return FiniteStructure(GRAPH, tuple(domain), {"E": edges})


def edges(a: FiniteStructure):
    return a.relations["E"]


# ---------------------------------------------------------------- generators


def _check_size(k, name):
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise StructureError(f"{name} size must be a non-negative integer, got {k!r}")


def clique(k: int) -> FiniteStructure:
    """Symmetric irreflexive complete graph on ``0..k-1``."""
    _check_size(k, "clique")
    return graph([(i, j) for i in range(k) for j in range(k) if i != j], range(k))


def path(k: int) -> FiniteStructure:
    """Directed path ``0 -> 1 -> ... -> k``."""
    _check_size(k, "path")
    return graph([(i, i + 1) for i in range(k)], range(k + 1))


def transitive_tournament(k: int) -> FiniteStructure:
    """Transitive tournament on ``0..k``: an edge ``i -> j`` whenever ``i < j``."""
    _check_size(k, "transitive tournament")
    return graph([(i, j) for i in range(k + 1) for j in range(i + 1, k + 1)], range(k + 1))


def zigzag(n: int) -> FiniteStructure:
    """The oriented path ``a'0 -> a0 -> b0 <- a1 -> b1 <- ... <- an -> bn -> b'n``.

    Its net length is 3, so it maps to ``path(k)`` only for ``k >= 3``.
    Elements are integers numbered along the path: ``0 = a'0``, ``2i+1 = ai``,
    ``2i+2 = bi`` and ``2n+3 = b'n``.
    """
    _check_size(n, "zigzag")
    a = lambda i: 2 * i + 1
    b = lambda i: 2 * i + 2
    es = [(0, a(0)), (b(n), 2 * n + 3)]
    for i in range(n + 1):
        es.append((a(i), b(i)))
        if i > 0:
            es.append((a(i), b(i - 1)))
    es.sort()
    return graph(es, range(2 * n + 4))


def link(n: int, signature: Signature = GRAPH) -> FiniteStructure:
    """The n-link: domain ``0..n``, every tuple whose entries are pairwise within 1."""
    _check_size(n, "link")
    rels = {}
    for name, k in signature.predicates:
        ts = []
        for i in range(n + 1):
            for t in itertools.product((i, i + 1) if i < n else (i,), repeat=k):
                ts.append(t)
        rels[name] = ts
    return FiniteStructure(signature, tuple(range(n + 1)), rels)


def unary_singleton(tau: Iterable[str], signature: Signature) -> FiniteStructure:
    """One element lying in exactly the unary predicates named in ``tau``."""
    tau = set(tau)
    for p in tau:
        if signature.arity(p) != 1:
            raise StructureError(f"{p} is not unary")
    return FiniteStructure(signature, (0,), {p: [(0,)] for p in tau})


def generate(kind: str, n: int, signature: Signature = GRAPH, tau=()) -> FiniteStructure:
    """Dispatch to a named generator (``clique``, ``path``, ``tournament``, ...)."""
    table = {
        "clique": clique,
        "path": path,
        "tournament": transitive_tournament,
        "transitive_tournament": transitive_tournament,
        "zigzag": zigzag,
    }
    if kind in table:
        return table[kind](n)
    if kind == "link":
        return link(n, signature)
    if kind == "unary_singleton":
        return unary_singleton(tau, signature)
    raise StructureError(f"unknown generator {kind!r}")


# ------------------------------------------------------------- constructions


def _same_signature(a, b):
    if a.signature != b.signature:
        raise StructureError("structures have different signatures")


def product(a: FiniteStructure, b: FiniteStructure) -> FiniteStructure:
    """Categorical product; elements are pairs ``(x, y)``."""
    _same_signature(a, b)
    dom = tuple(itertools.product(a.domain, b.domain))
    rels = {}
    for name in a.signature.names:
        rels[name] = [tuple(zip(s, t)) for s in a.relations[name] for t in b.relations[name]]
    return FiniteStructure(a.signature, dom, rels)


def disjoint_union(a: FiniteStructure, b: FiniteStructure) -> FiniteStructure:
    """Disjoint union; elements are tagged ``(0, x)`` and ``(1, y)``."""
    _same_signature(a, b)
    dom = tuple((0, x) for x in a.domain) + tuple((1, y) for y in b.domain)
    rels = {}
    for name in a.signature.names:
        rels[name] = [tuple((0, x) for x in t) for t in a.relations[name]] + \
                     [tuple((1, y) for y in t) for t in b.relations[name]]
    return FiniteStructure(a.signature, dom, rels)


def mark_name(element) -> str:
    return f"P_{element}"


def mark_target(b: FiniteStructure) -> FiniteStructure:
    """Add a unary predicate ``P_b`` holding exactly at ``b``, for each element."""
    if not b.domain:
        raise StructureError("cannot mark an empty structure")
    names = [mark_name(x) for x in b.domain]
    if len(set(names)) != len(names) or set(names) & set(b.signature.names):
        raise StructureError("mark predicate names collide")
    sig = b.signature.extend((n, 1) for n in names)
    rels = dict(b.relations)
    for x, n in zip(b.domain, names):
        rels[n] = [(x,)]
    return FiniteStructure(sig, b.domain, rels)


def collapse_marks(a: FiniteStructure, b: FiniteStructure) -> FiniteStructure:
    """Reduce a structure over the marked signature of ``b`` to one over ``b``'s signature.

    The result lives on the disjoint union of ``a`` (tag 0) and ``b`` (tag 1).
    It keeps every tuple of both, and for each tuple of ``b`` it adds the
    variants where one coordinate ``y`` is swapped for an element of ``a``
    carrying the mark of ``y``.  Then ``a -> mark_target(b)`` exactly when the
    result maps to ``b``, provided ``b`` is a core.
    """
    sig = b.signature
    marked = mark_target(b).signature
    if a.signature != marked:
        raise StructureError("source must use the marked signature of the target")
    carriers = {y: [x for (x,) in a.relations[mark_name(y)]] for y in b.domain}
    dom = tuple((0, x) for x in a.domain) + tuple((1, y) for y in b.domain)
    rels = {}
    for name, k in sig.predicates:
        ts = {tuple((0, x) for x in t) for t in a.relations[name]}
        for t in b.relations[name]:
            base = tuple((1, y) for y in t)
            ts.add(base)
            for i, y in enumerate(t):
                for x in carriers[y]:
                    ts.add(base[:i] + ((0, x),) + base[i + 1:])
        rels[name] = ts
    return FiniteStructure(sig, dom, rels)


def adjacency(a: FiniteStructure, elem, pred: str, pos: int) -> list[tuple]:
    """Completions of ``elem`` at 0-based position ``pos`` of ``pred``.

    Returns the tuples ``t`` (with the entry at ``pos`` removed) such that
    inserting ``elem`` at ``pos`` gives a tuple of ``pred``.
    """
    k = a.signature.arity(pred)
    if not 0 <= pos < k:
        raise StructureError(f"position {pos} out of range for {pred}/{k}")
    if elem not in a.index:
        raise StructureError(f"{elem!r} is not in the domain")
    out = {t[:pos] + t[pos + 1:] for t in a.relations[pred] if t[pos] == elem}
    return sorted(out, key=lambda t: tuple(a.index[x] for x in t))


def adjacency_table(a: FiniteStructure) -> dict:
    """Map ``(elem, pred, pos)`` to the list of completions, for all triples."""
    table = {(x, n, i): [] for x in a.domain for n, k in a.signature.predicates for i in range(k)}
    for n, k in a.signature.predicates:
        for t in a.relations[n]:
            for i in range(k):
                table[(t[i], n, i)].append(t[:i] + t[i + 1:])
    return table


# ------------------------------------------------------------------ metrics


def incidence_graph(a: FiniteStructure) -> dict:
    """Bipartite incidence graph as an adjacency dict.

    Element nodes are ``("e", x)``; tuple nodes are ``("t", name, tuple)``.
    """
    g = {("e", x): set() for x in a.domain}
    for name, t in a.all_tuples():
        node = ("t", name, t)
        g[node] = set()
        for x in set(t):
            g[node].add(("e", x))
            g[("e", x)].add(node)
    return g


def _element_graph(a: FiniteStructure) -> dict:
    """Gaifman graph: two elements are adjacent when they share a tuple."""
    g = {x: set() for x in a.domain}
    for _, t in a.all_tuples():
        for x in t:
            for y in t:
                if x != y:
                    g[x].add(y)
    return g


def _bfs(g, src):
    dist = {src: 0}
    q = deque([src])
    while q:
        u = q.popleft()
        for v in g[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def distance(a: FiniteStructure, x, y) -> float:
    """Half the incidence-graph distance; ``inf`` when disconnected."""
    d = _bfs(_element_graph(a), x)
    return float(d[y]) if y in d else float("inf")


def distances_from(a: FiniteStructure, x) -> dict:
    return _bfs(_element_graph(a), x)


def diameter(a: FiniteStructure) -> float:
    g = _element_graph(a)
    best = 0
    for x in a.domain:
        d = _bfs(g, x)
        if len(d) < len(a.domain):
            return float("inf")
        best = max(best, max(d.values()))
    return float(best)


def connected_components(a: FiniteStructure) -> list[tuple]:
    g = _element_graph(a)
    seen = set()
    comps = []
    for x in a.domain:
        if x in seen:
            continue
        comp = set(_bfs(g, x))
        seen |= comp
        comps.append(tuple(y for y in a.domain if y in comp))
    return comps


def is_connected(a: FiniteStructure) -> bool:
    return len(connected_components(a)) <= 1


def ball(a: FiniteStructure, center, radius: int) -> FiniteStructure:
    d = _bfs(_element_graph(a), center)
    return a.induced(x for x, r in d.items() if r <= radius)


def is_sigma_tree(a: FiniteStructure) -> bool:
    """True when the incidence graph is a tree (connected and acyclic)."""
    g = incidence_graph(a)
    if not g:
        return False
    n_edges = sum(len(v) for v in g.values()) // 2
    return n_edges == len(g) - 1 and len(_bfs(g, next(iter(g)))) == len(g)


def metrics(a: FiniteStructure) -> dict:
    return {
        "size": len(a),
        "tuples": a.n_tuples(),
        "components": len(connected_components(a)),
        "diameter": diameter(a),
        "sigma_tree": is_sigma_tree(a),
    }


# ---------------------------------------------------------- canonical forms


def _refine(a: FiniteStructure, colors: dict, occurrences) -> dict:
    """Colour refinement until stable; colours are canonical small integers."""
    n_classes = len(set(colors.values()))
    while True:
        sigs = {}
        for x in a.domain:
            occ = sorted((name, i, tuple(colors[y] for y in t)) for name, i, t in occurrences[x])
            sigs[x] = (colors[x], tuple(occ))
        ranks = {s: r for r, s in enumerate(sorted(set(sigs.values())))}
        new = {x: ranks[sigs[x]] for x in a.domain}
        if len(ranks) == n_classes:
            return new
        colors, n_classes = new, len(ranks)


def canonical_form(a: FiniteStructure) -> tuple:
    """A complete isomorphism invariant.

    Colour refinement plus individualisation; the result is the least
    encoding of the structure over all leaf orderings.
    """
    occurrences = {x: [] for x in a.domain}
    for name, t in a.all_tuples():
        for i, x in enumerate(t):
            occurrences[x].append((name, i, t))
    start = _refine(a, {x: 0 for x in a.domain}, occurrences)
    best = None

    def encode(order):
        pos = {x: i for i, x in enumerate(order)}
        return tuple((name, tuple(sorted(tuple(pos[x] for x in t) for t in a.relations[name])))
                     for name in a.signature.names)

    def search(colors):
        nonlocal best
        cells = {}
        for x, c in colors.items():
            cells.setdefault(c, []).append(x)
        if len(cells) == len(colors):
            order = sorted(colors, key=colors.get)
            enc = encode(order)
            if best is None or enc < best:
                best = enc
            return
        target = min((c for c, xs in cells.items() if len(xs) > 1), key=lambda c: (len(cells[c]), c))
        for x in cells[target]:
            trial = {y: (2 * colors[y] if colors[y] != target else 2 * target + (0 if y == x else 1))
                     for y in colors}
            search(_refine(a, trial, occurrences))

    search(start)
    return (len(a.domain), best)


def is_isomorphic(a: FiniteStructure, b: FiniteStructure) -> bool:
    return a.signature == b.signature and canonical_form(a) == canonical_form(b)


def from_canonical(signature: Signature, form: tuple) -> FiniteStructure:
    n, enc = form
    return FiniteStructure(signature, tuple(range(n)), dict(enc))


# ------------------------------------------------------------------ corpora


def all_structures(signature: Signature, n: int, connected: bool = False) -> list[FiniteStructure]:
    """Every structure on ``0..n-1`` up to isomorphism, by brute force.

    Intended for small corpora; the number of possible tuples must stay
    below 24 so that masks fit comfortably.
    """
    slots = [(name, t) for name, k in signature.predicates
             for t in itertools.product(range(n), repeat=k)]
    m = len(slots)
    if m > 24:
        raise StructureError(f"{m} possible tuples is too many to enumerate")
    slot_index = {s: i for i, s in enumerate(slots)}
    masks = np.arange(1 << m, dtype=np.int64)
    canon = np.full(1 << m, np.iinfo(np.int64).max, dtype=np.int64)
    for perm in itertools.permutations(range(n)):
        image = np.zeros_like(masks)
        for i, (name, t) in enumerate(slots):
            j = slot_index[(name, tuple(perm[x] for x in t))]
            image |= ((masks >> i) & 1) << j
        np.minimum(canon, image, out=canon)
    reps = np.unique(canon)
    out = []
    for mask in reps.tolist():
        rels = {name: [] for name in signature.names}
        for i, (name, t) in enumerate(slots):
            if mask >> i & 1:
                rels[name].append(t)
        s = FiniteStructure(signature, tuple(range(n)), rels)
        if connected and not is_connected(s):
            continue
        out.append(s)
    return out


def all_graphs(max_vertices: int, min_vertices: int = 1, connected: bool = False) -> list[FiniteStructure]:
    """All digraphs (loops allowed) with the given vertex counts, up to isomorphism."""
    out = []
    for n in range(min_vertices, max_vertices + 1):
        out.extend(all_structures(GRAPH, n, connected=connected))
    return out
