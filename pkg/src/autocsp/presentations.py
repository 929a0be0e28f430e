"""Automatic presentations of (possibly infinite) relational structures.

A presentation gives a regular domain language and one synchronous automaton
per predicate.  Each accepted word stands for its own element, so
presentations here are injective by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

from . import automata as au
from . import structures as st
from .automata import PAD, SyncAutomaton
from .structures import FiniteStructure, Signature


class PresentationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Presentation:
    """A signature, an alphabet, a domain automaton and relation automata.

    ``names`` optionally maps words back to element names, which keeps
    results readable for presentations built from finite structures.
    """

    signature: Signature
    alphabet: tuple
    domain: SyncAutomaton
    relations: Mapping[str, SyncAutomaton]
    names: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(sorted(self.alphabet)))
        object.__setattr__(self, "relations", dict(self.relations))

    def name_of(self, word):
        return self.names.get(tuple(word), au.show_word(word))

    def word_of(self, element) -> tuple:
        for w, x in self.names.items():
            if x == element:
                return w
        raise PresentationError(f"{element!r} has no recorded word")

    def contains(self, word) -> bool:
        return self.domain.accepts([tuple(word)])

    def holds(self, name: str, words) -> bool:
        return self.relations[name].accepts([tuple(w) for w in words])


def domain_power(p: Presentation, k: int) -> SyncAutomaton:
    """Automaton for ``dom^k``."""
    out = au.universal(p.alphabet, k)
    for i in range(k):
        out = au.intersect(out, au.expand(p.domain, [i], k))
    return au.canonical(out)


def validate(p: Presentation) -> list[str]:
    """Return a list of problems; an empty list means the presentation is well formed."""
    problems = []
    if len(p.alphabet) < 2:
        problems.append("alphabet must have at least two letters")
    if p.domain.arity != 1:
        problems.append("domain automaton must have arity 1")
    for a in [p.domain, *p.relations.values()]:
        if a.alphabet != p.alphabet:
            problems.append(f"automaton alphabet {a.alphabet} differs from {p.alphabet}")
    if set(p.relations) != set(p.signature.names):
        problems.append(f"relations {sorted(p.relations)} do not match signature {p.signature}")
    if problems:
        return problems
    for name, k in p.signature.predicates:
        r = p.relations[name]
        if r.arity != k:
            problems.append(f"{name} automaton has arity {r.arity}, expected {k}")
            continue
        stray = au.shortest_accepted(au.difference(r, domain_power(p, k)))
        if stray is not None:
            shown = ", ".join(au.show_word(w) or "ε" for w in stray)
            problems.append(f"{name} relates words outside the domain: ({shown})")
    return problems


def check(p: Presentation) -> Presentation:
    problems = validate(p)
    if problems:
        raise PresentationError("; ".join(problems))
    return p


def element_word(i: int) -> tuple:
    return ("a",) * i


def from_finite(a: FiniteStructure) -> Presentation:
    """Present a finite structure by numbering its elements in unary.

    Element ``i`` (in domain order) becomes the word ``a^i``.  The unused
    letter ``b`` keeps the alphabet at two letters.
    """
    sigma = ("a", "b")
    words = {x: element_word(i) for i, x in enumerate(a.domain)}
    dom = au.from_tuples(sigma, 1, [(w,) for w in words.values()])
    rels = {name: au.canonical(au.from_tuples(sigma, k, [tuple(words[x] for x in t) for t in a.relations[name]]))
            for name, k in a.signature.predicates}
    return Presentation(a.signature, sigma, au.canonical(dom), rels, {w: x for x, w in words.items()})


def to_finite(p: Presentation, max_elements: int = 10 ** 5) -> FiniteStructure:
    """Materialise a presentation with a finite domain language."""
    if not au.is_finite(p.domain):
        raise PresentationError("domain language is infinite")
    words = [w for (w,) in au.accepted_tuples(p.domain, max_elements)]
    label = {w: p.names.get(w, w) for w in words}
    rels = {}
    for name, k in p.signature.predicates:
        r = au.intersect(p.relations[name], domain_power(p, k))
        rels[name] = [tuple(label[w] for w in t) for t in au.accepted_tuples(r)]
    return FiniteStructure(p.signature, tuple(label[w] for w in words), rels)


# ------------------------------------------------------------------ products


def pair_symbol(x, y) -> str:
    return f"{x}:{y}"


def pair_alphabet(sigma, gamma) -> tuple:
    syms = [pair_symbol(x, y) for x in (PAD, *sigma) for y in (PAD, *gamma)]
    return tuple(sorted(s for s in syms if s != pair_symbol(PAD, PAD)))


def pair_word(u, v) -> tuple:
    """The convolution of two words written over the pair alphabet."""
    return tuple(pair_symbol(x, y) for x, y in au.convolve([u, v]))


def split_pair_word(w) -> tuple:
    left = tuple(s.split(":", 1)[0] for s in w)
    right = tuple(s.split(":", 1)[1] for s in w)
    return tuple(x for x in left if x != PAD), tuple(y for y in right if y != PAD)


def pair_automaton(a: SyncAutomaton, b: SyncAutomaton) -> SyncAutomaton:
    """Accept tuples of pair words whose left halves ``a`` accepts and right halves ``b`` accepts."""
    if a.arity != b.arity:
        raise PresentationError("pairing automata of different arities")
    k = a.arity
    a, b = au.normalize(a), au.normalize(b)
    alph = pair_alphabet(a.alphabet, b.alphabet)
    split = {}
    for s in alph:
        x, y = s.split(":", 1)
        split[s] = (x, y)
    done = -1

    def half(aut, q, letter):
        """Advance one half; ``done`` marks that all its words have ended."""
        if all(x == PAD for x in letter):
            if q == done or q in aut.accepting:
                return done
            return None
        if q == done:
            return None
        return aut.delta[q].get(letter)

    def step(state):
        qa, qb, ended = state
        for l in au.letters(alph, k):
            m = au._pad_mask(l)
            if m & ended != ended:
                continue
            la = tuple(PAD if s == PAD else split[s][0] for s in l)
            lb = tuple(PAD if s == PAD else split[s][1] for s in l)
            qa2 = half(a, qa, la)
            if qa2 is None:
                continue
            qb2 = half(b, qb, lb)
            if qb2 is None:
                continue
            yield l, (qa2, qb2, m)

    def accept(state):
        qa, qb, _ = state
        return (qa == done or qa in a.accepting) and (qb == done or qb in b.accepting)

    return au.canonical(au._explore((a.initial, b.initial, 0), step, accept, k, alph))


def product_presentation(p: Presentation, q: Presentation) -> Presentation:
    """Present the product structure; elements are pair words ``u (x) v``."""
    if p.signature != q.signature:
        raise PresentationError("signatures differ")
    dom = pair_automaton(p.domain, q.domain)
    rels = {name: pair_automaton(p.relations[name], q.relations[name]) for name in p.signature.names}
    names = {}
    if p.names or q.names:
        for u, x in (p.names or {}).items():
            for v, y in (q.names or {}).items():
                names[pair_word(u, v)] = (x, y)
    return Presentation(p.signature, dom.alphabet, dom, rels, names)


# ------------------------------------------------------------------- gadgets


def link_gadget(g: Presentation, signature: Signature = st.GRAPH) -> Presentation:
    """A structure in which linkedness mirrors connectivity in the graph ``g``.

    Every edge ``u -> v`` of ``g`` contributes all tuples with entries in
    ``{u, v}`` to every predicate of ``signature``.
    """
    if g.signature != st.GRAPH:
        raise PresentationError("link gadget needs a graph presentation")
    rels = {}
    for name, k in signature.predicates:
        xs = [f"x{i}" for i in range(k)]
        body = au.And((au.Rel("E", ("u", "v")),) + tuple(
            au.Or((au.Equal(x, "u"), au.Equal(x, "v"))) for x in xs))
        f = au.Exists("u", au.Exists("v", body))
        rels[name] = au.compile_formula(f, g.relations, xs, g.alphabet, domain=g.domain)
    return Presentation(signature, g.alphabet, g.domain, rels, dict(g.names))


@lru_cache(maxsize=16)
def _gadget_base(a: Presentation, b: FiniteStructure):
    """The product ``a x (b x b)`` shared by every choice of ``s`` and ``t``."""
    sq = from_finite(st.product(b, b))
    return product_presentation(a, sq), {x: w for w, x in sq.names.items()}


def undec_gadget(a: Presentation, b: FiniteStructure, s, t) -> Presentation:
    """Marked product of ``a`` with ``b x b``.

    The element ``s (x) (y0, y)`` carries the mark of ``y0`` and so does
    ``t (x) (y, y0)``.  When ``a`` is a link gadget this structure maps to the
    marked target iff ``s`` and ``t`` are not linked in ``a``.
    """
    s, t = tuple(s), tuple(t)
    for w in (s, t):
        if not a.contains(w):
            raise PresentationError(f"{au.show_word(w)!r} is not in the domain")
    prod, enc = _gadget_base(a, b)
    marked = st.mark_target(b).signature
    rels = dict(prod.relations)
    for y0 in b.domain:
        words = [(pair_word(s, enc[(y0, y)]),) for y in b.domain]
        words += [(pair_word(t, enc[(y, y0)]),) for y in b.domain]
        rels[st.mark_name(y0)] = au.canonical(au.from_tuples(prod.alphabet, 1, words))
    names = {}
    for w, (x, pair) in prod.names.items():
        names[w] = (x, pair)
    return Presentation(marked, prod.alphabet, prod.domain, rels, names)


# ------------------------------------------------------------ model checking


def model_check(p: Presentation, formula) -> bool:
    """Evaluate a first-order sentence with quantifiers ranging over the domain."""
    if isinstance(formula, str):
        formula = au.parse_formula(formula)
    free = au.free_vars(formula)
    if free:
        raise PresentationError(f"formula has free variables {sorted(free)}")
    return au.compile_formula(formula, p.relations, (), p.alphabet, domain=p.domain)


def _elimination_order(d: FiniteStructure) -> list:
    """Greedy min-degree order on the Gaifman graph; first eliminated comes first."""
    nbrs = {x: set() for x in d.domain}
    for _, t in d.all_tuples():
        for x in t:
            nbrs[x] |= set(t) - {x}
    order = []
    left = set(d.domain)
    while left:
        x = min(left, key=lambda v: (len(nbrs[v] & left), d.index[v]))
        order.append(x)
        live = nbrs[x] & left
        for y in live:
            nbrs[y] |= live - {y}
        left.discard(x)
    return order


def canonical_query(d: FiniteStructure):
    """The existential sentence whose models are the structures receiving a map from ``d``."""
    var = {x: f"v{i}" for i, x in enumerate(d.domain)}
    atoms = [au.Rel(name, tuple(var[x] for x in t)) for name, t in d.all_tuples()]
    order = _elimination_order(d)
    body = au.And(tuple(atoms))
    # the first eliminated variable is quantified innermost
    return au.exists_many([var[x] for x in reversed(order)], body)


def exists_hom_from_finite(p: Presentation, d: FiniteStructure) -> bool:
    if d.signature != p.signature:
        raise PresentationError("signatures differ")
    return model_check(p, canonical_query(d))


def hom_with_dual(p: Presentation, duals: Iterable[FiniteStructure]) -> bool:
    """Decide ``p -> b`` from a finite dual of ``b``: no dual member may map into ``p``."""
    return not any(exists_hom_from_finite(p, d) for d in duals)


# ------------------------------------------------------------------ builtins


def binary_tree() -> Presentation:
    """The infinite binary tree: every word ``u`` has edges to ``u0`` and ``u1``."""
    sigma = ("0", "1")
    dom = au.universal(sigma, 1)
    # after the shared prefix the second word carries exactly one extra letter
    delta = [{(x, x): 0 for x in sigma}, {}]
    delta[0].update({(PAD, x): 1 for x in sigma})
    edge = SyncAutomaton(2, sigma, delta, 0, [1])
    return Presentation(st.GRAPH, sigma, au.canonical(dom), {"E": edge})


def infinite_matching() -> Presentation:
    """Disjoint edges ``a^n -> b a^n``."""
    sigma = ("a", "b")
    dom = au.canonical(SyncAutomaton(1, sigma, [{("a",): 1, ("b",): 2}, {("a",): 1}, {("a",): 2}], 0, [0, 1, 2]))
    # reading (a^n, b a^n): first column (a, b) or (#, b) when n = 0
    delta = [{("a", "b"): 1, (PAD, "b"): 3}, {("a", "a"): 1, (PAD, "a"): 3}, {}, {}]
    edge = au.canonical(SyncAutomaton(2, sigma, delta, 0, [3]))
    return Presentation(st.GRAPH, sigma, dom, {"E": edge})


def infinite_path() -> Presentation:
    """The one-way infinite path ``a^n -> a^(n+1)``."""
    sigma = ("a", "b")
    dom = au.canonical(SyncAutomaton(1, sigma, [{("a",): 0}], 0, [0]))
    edge = au.canonical(SyncAutomaton(2, sigma, [{("a", "a"): 0, (PAD, "a"): 1}, {}], 0, [1]))
    return Presentation(st.GRAPH, sigma, dom, {"E": edge})


BUILTINS = {
    "binary-tree": binary_tree,
    "matching": infinite_matching,
    "path": infinite_path,
}
