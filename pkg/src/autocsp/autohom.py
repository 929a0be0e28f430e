"""Homomorphisms from automatic structures to finite targets.

The consistency operator is lifted to presentations: guess functions are
stored as classifiers, deterministic automata over the domain alphabet that
label every domain word with a set of target elements.  One round combines,
for every predicate and position, the relation automaton with copies of the
current classifier and projects onto the distinguished coordinate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from . import automata as au
from . import structures as st
from .automata import PAD, SyncAutomaton
from .duality import critical_obstructions, has_tree_duality
from .homset import HomMap
from .presentations import Presentation, domain_power, exists_hom_from_finite
from .structures import FiniteStructure


class Classifier:
    """A Moore machine mapping each domain word to a set of target elements.

    Words outside the domain have no label.  Instances are always minimal
    and canonically numbered, so ``==`` compares behaviour.
    """

    __slots__ = ("alphabet", "delta", "labels")

    def __init__(self, alphabet, delta, labels, initial: int = 0):
        delta, labels = au.moore_minimize(delta, initial, labels)
        self.alphabet = tuple(sorted(alphabet))
        self.delta = tuple(delta)
        self.labels = tuple(labels)

    def state(self, word):
        q = 0
        for s in word:
            q = self.delta[q].get((s,))
            if q is None:
                return None
        return q

    def __call__(self, word):
        q = self.state(tuple(word))
        return None if q is None else self.labels[q]

    def __eq__(self, other):
        return isinstance(other, Classifier) and (self.alphabet, self.delta, self.labels) == \
            (other.alphabet, other.delta, other.labels)

    def __hash__(self):
        return hash((self.alphabet, self.labels))

    def __repr__(self):
        return f"Classifier(states={len(self.delta)}, labels={sorted(set(map(_show, self.labels)))})"

    @property
    def n_states(self):
        return len(self.delta)

    def automaton(self, predicate) -> SyncAutomaton:
        """Arity-1 automaton of the words whose label satisfies ``predicate``."""
        acc = [q for q, lab in enumerate(self.labels) if lab is not None and predicate(lab)]
        return au.canonical(SyncAutomaton(1, self.alphabet, self.delta, 0, acc))

    def level_set(self, ys) -> SyncAutomaton:
        ys = frozenset(ys)
        return self.automaton(lambda lab: lab == ys)

    def member(self, y) -> SyncAutomaton:
        return self.automaton(lambda lab: y in lab)

    def domain(self) -> SyncAutomaton:
        return self.automaton(lambda lab: True)

    def values(self) -> set:
        return {lab for lab in self.labels if lab is not None}

    def witness(self, predicate):
        """A shortest word whose label satisfies ``predicate``, or ``None``."""
        got = au.shortest_accepted(self.automaton(predicate))
        return None if got is None else got[0]

    def relabel(self, fn) -> "Classifier":
        return Classifier(self.alphabet, self.delta,
                          [None if lab is None else fn(lab) for lab in self.labels])


def _show(lab):
    return "-" if lab is None else "{" + ",".join(map(str, sorted(lab, key=str))) + "}"


def top_classifier(p: Presentation, b: FiniteStructure) -> Classifier:
    full = frozenset(b.domain)
    dom = p.domain
    labels = [full if q in dom.accepting else None for q in range(dom.n_states)]
    return Classifier(p.alphabet, dom.delta, labels, dom.initial)


def classifier_from_function(p: Presentation, fn) -> Classifier:
    """Classifier for a guess function on a finite domain language."""
    words = [w for (w,) in au.accepted_tuples(p.domain)]
    trie = [{}]
    labels = [None]
    for w in words:
        q = 0
        for s in w:
            nxt = trie[q].get((s,))
            if nxt is None:
                nxt = len(trie)
                trie.append({})
                labels.append(None)
                trie[q][(s,)] = nxt
            q = nxt
        labels[q] = frozenset(fn(w))
    return Classifier(p.alphabet, trie, labels)


# --------------------------------------------------------- operator round


_OFF = -1  # classifier copy has left the domain


def _bad_machine(rel: SyncAutomaton, i: int, f: Classifier, b: FiniteStructure, name: str):
    """Moore machine labelling ``x`` with the targets refuted at position ``i`` of ``name``.

    ``y`` is refuted when some tuple of ``rel`` has ``x`` at ``i`` and its
    other entries carry labels that no completion of ``y`` can match.
    """
    k = rel.arity
    others = [j for j in range(k) if j != i]
    completions = {y: st.adjacency(b, y, name, i) for y in b.domain}

    def label(c):
        if isinstance(c, tuple):
            return c[1]
        return None if c == _OFF else f.labels[c]

    bad_cache = {}

    def bad(state):
        r, cs = state
        if r not in rel.accepting:
            return frozenset()
        labs = tuple(label(c) or frozenset() for c in cs)
        if labs not in bad_cache:
            bad_cache[labs] = frozenset(
                y for y in b.domain
                if not any(all(v in lab for v, lab in zip(comp, labs)) for comp in completions[y]))
        return bad_cache[labs]

    def advance(state, letter):
        r, cs = state
        r2 = rel.delta[r].get(letter)
        if r2 is None:
            return None
        out = []
        for j, c in zip(others, cs):
            s = letter[j]
            if s == PAD:
                out.append(c if isinstance(c, tuple) else ("end", label(c)))
            elif isinstance(c, tuple):
                return None
            elif c == _OFF:
                out.append(_OFF)
            else:
                nxt = f.delta[c].get((s,))
                out.append(_OFF if nxt is None else nxt)
        return r2, tuple(out)

    tail_memo = {}

    def tail_bad(state):
        """Refuted targets once ``x`` has ended, looking through the remaining columns."""
        got = tail_memo.get(state)
        if got is not None:
            return got
        seen = {state}
        stack = [state]
        acc = set()
        while stack:
            s = stack.pop()
            acc |= bad(s)
            for letter in rel.delta[s[0]]:
                if letter[i] != PAD:
                    continue
                t = advance(s, letter)
                if t is not None and t not in seen:
                    seen.add(t)
                    stack.append(t)
        tail_memo[state] = frozenset(acc)
        return tail_memo[state]

    start = (rel.initial, tuple(0 for _ in others))

    def step(S):
        out = {}
        for s in S:
            for letter in rel.delta[s[0]]:
                if letter[i] == PAD:
                    continue
                t = advance(s, letter)
                if t is not None:
                    out.setdefault((letter[i],), set()).add(t)
        for l in sorted(out):
            yield l, frozenset(out[l])

    ids = {frozenset([start]): 0}
    order = [frozenset([start])]
    delta = []
    n = 0
    while n < len(order):
        S = order[n]
        n += 1
        row = {}
        for l, T in step(S):
            if T not in ids:
                ids[T] = len(order)
                order.append(T)
            row[l] = ids[T]
        delta.append(row)
    labels = [frozenset().union(*(tail_bad(s) for s in S)) for S in order]
    return delta, labels


def hc_step_auto(p: Presentation, b: FiniteStructure, f: Classifier) -> Classifier:
    """One round of the consistency operator on a presented structure."""
    machines = []
    for name, k in p.signature.predicates:
        rel = au.normalize(p.relations[name])
        for i in range(k):
            machines.append(_bad_machine(rel, i, f, b, name))
    empty_bad = frozenset()

    def step(state):
        q, ms = state
        for (s,), q2 in sorted(f.delta[q].items()):
            nxt = []
            for (delta, _), m in zip(machines, ms):
                nxt.append(None if m is None else delta[m].get((s,)))
            yield (s,), (q2, tuple(nxt))

    start = (0, tuple(0 for _ in machines))
    ids = {start: 0}
    order = [start]
    delta = []
    n = 0
    while n < len(order):
        s = order[n]
        n += 1
        row = {}
        for l, t in step(s):
            if t not in ids:
                ids[t] = len(order)
                order.append(t)
            row[l] = ids[t]
        delta.append(row)
    labels = []
    for q, ms in order:
        lab = f.labels[q]
        if lab is not None:
            for (_, mlabels), m in zip(machines, ms):
                lab = lab - (empty_bad if m is None else mlabels[m])
        labels.append(lab)
    return Classifier(p.alphabet, delta, labels)


def hc_step_pipeline(p: Presentation, b: FiniteStructure, f: Classifier) -> Classifier:
    """The same round as ``hc_step_auto``, built from generic automaton operations.

    Slower; it spells the construction out with cylindrification,
    intersection, complementation and projection, and serves as a cross-check.
    """
    sigma = p.alphabet
    member = {y: f.member(y) for y in b.domain}
    keep = {y: p.domain for y in b.domain}
    for name, k in p.signature.predicates:
        rel = au.normalize(p.relations[name])
        for i in range(k):
            others = [j for j in range(k) if j != i]
            for y in b.domain:
                good = au.empty(sigma, k)
                for comp in st.adjacency(b, y, name, i):
                    part = au.universal(sigma, k)
                    for j, v in zip(others, comp):
                        part = au.intersect(part, au.expand(member[v], [j], k))
                    good = au.union(good, part)
                refuted = au.project(au.difference(rel, good), [i])
                keep[y] = au.difference(keep[y], refuted)
    auts = [au.intersect(keep[y], member[y]) for y in b.domain]

    def step(state):
        q, qs = state
        for (s,), q2 in sorted(f.delta[q].items()):
            yield (s,), (q2, tuple(None if x is None else a.delta[x].get((s,)) for a, x in zip(auts, qs)))

    states = au._explore((0, tuple(a.initial for a in auts)), step, lambda s: True, 1, sigma)
    # recover labels by replaying the exploration order
    order = [(0, tuple(a.initial for a in auts))]
    seen = {order[0]: 0}
    i = 0
    while i < len(order):
        for _, t in step(order[i]):
            if t not in seen:
                seen[t] = len(order)
                order.append(t)
        i += 1
    labels = []
    for q, qs in order:
        if f.labels[q] is None:
            labels.append(None)
        else:
            labels.append(frozenset(y for y, a, x in zip(b.domain, auts, qs)
                                    if x is not None and x in a.accepting))
    return Classifier(sigma, states.delta, labels)


# -------------------------------------------------------------- iteration


@dataclass(frozen=True)
class NoHom:
    """Consistency emptied the guess set of ``word``, so no homomorphism exists."""

    word: tuple
    round: int
    trace: tuple = field(repr=False)


@dataclass(frozen=True)
class Fixpoint:
    """The operator stabilised at ``round`` with every domain word labelled."""

    classifier: Classifier
    round: int
    trace: tuple = field(repr=False)


@dataclass(frozen=True)
class BudgetExhausted:
    rounds: int
    trace: tuple = field(repr=False)


def hc_auto(p: Presentation, b: FiniteStructure, max_rounds: int = 64, stop_on_empty: bool = True,
            step=hc_step_auto):
    """Iterate the symbolic operator from the top classifier.

    Round ``n`` holds the n-th iterate.  Returns ``NoHom`` at the first round
    where some domain word has an empty label (when ``stop_on_empty``),
    ``Fixpoint`` at the least ``n`` whose iterate equals the next one, or
    ``BudgetExhausted`` after ``max_rounds`` rounds.
    """
    if p.signature != b.signature:
        raise ValueError("signatures differ")
    trace = [top_classifier(p, b)]
    while True:
        cur = trace[-1]
        n = len(trace) - 1
        if stop_on_empty:
            w = cur.witness(lambda lab: not lab)
            if w is not None:
                return NoHom(w, n, tuple(trace))
        if n >= max_rounds:
            return BudgetExhausted(n, tuple(trace))
        nxt = step(p, b, cur)
        if nxt == cur:
            return Fixpoint(cur, n, tuple(trace))
        trace.append(nxt)


# ------------------------------------------------------------ colorings


class RegularColoring:
    """A map from domain words to target elements given by regular classes.

    ``classes[y]`` is an arity-1 automaton for the words coloured ``y``.
    """

    def __init__(self, alphabet, classes: Mapping):
        self.alphabet = tuple(sorted(alphabet))
        self.classes = {y: au.canonical(a) for y, a in classes.items()}

    def __eq__(self, other):
        return isinstance(other, RegularColoring) and self.alphabet == other.alphabet and \
            self.classes == other.classes

    def __repr__(self):
        return f"RegularColoring({ {y: a.n_states for y, a in self.classes.items()} })"

    def color(self, word):
        word = tuple(word)
        hits = [y for y, a in self.classes.items() if a.accepts([word])]
        return hits[0] if len(hits) == 1 else None

    def as_classifier(self) -> Classifier:
        """Moore machine labelling each word with the set of classes containing it."""
        ys = list(self.classes)
        auts = [self.classes[y] for y in ys]

        def step(qs):
            for s in self.alphabet:
                nxt = tuple(None if q is None else a.delta[q].get((s,)) for a, q in zip(auts, qs))
                if any(q is not None for q in nxt):
                    yield (s,), nxt

        start = tuple(a.initial for a in auts)
        aut = au._explore(start, step, lambda s: True, 1, self.alphabet)
        order = [start]
        seen = {start}
        i = 0
        while i < len(order):
            for _, t in step(order[i]):
                if t not in seen:
                    seen.add(t)
                    order.append(t)
            i += 1
        labels = []
        for qs in order:
            lab = frozenset(y for y, a, q in zip(ys, auts, qs) if q is not None and q in a.accepting)
            labels.append(lab or None)
        return Classifier(self.alphabet, aut.delta, labels)

    @classmethod
    def from_classifier(cls, c: Classifier, targets) -> "RegularColoring":
        return cls(c.alphabet, {y: c.member(y) for y in targets})


def coloring_from_fixpoint(p: Presentation, f: Classifier, g: HomMap) -> RegularColoring:
    """Compose the fixpoint with a witness ``g`` from the subset structure to the target."""
    dom = p.domain
    classes = {}
    for y in g.target.domain:
        classes[y] = au.intersect(f.automaton(lambda lab, y=y: bool(lab) and g[lab] == y), dom)
    return RegularColoring(p.alphabet, classes)


@dataclass(frozen=True)
class Synthesized:
    coloring: RegularColoring
    fixpoint: Fixpoint


@dataclass(frozen=True)
class Unknown:
    reason: str
    examined: int = 0


def synth_regular_hom(p: Presentation, b: FiniteStructure, max_rounds: int = 64):
    """Synthesise a regular homomorphism when ``b`` has tree duality.

    Returns ``Synthesized``, the ``NoHom`` refutation, or ``Unknown``.
    """
    ok, g = has_tree_duality(b)
    if not ok:
        return Unknown("target lacks tree duality")
    res = hc_auto(p, b, max_rounds)
    if isinstance(res, NoHom):
        return res
    if isinstance(res, BudgetExhausted):
        return Unknown(f"no fixpoint within {max_rounds} rounds", res.rounds)
    return Synthesized(coloring_from_fixpoint(p, res.classifier, g), res)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    kind: str = ""
    detail: tuple = ()

    def __bool__(self):
        return self.ok


def check_regular_hom(p: Presentation, b: FiniteStructure, coloring: RegularColoring) -> CheckResult:
    """Verify that a coloring partitions the domain and maps every tuple into ``b``."""
    dom = p.domain
    if set(coloring.classes) - set(b.domain):
        return CheckResult(False, "unknown-color", tuple(sorted(set(coloring.classes) - set(b.domain), key=str)))
    ys = [y for y in b.domain if y in coloring.classes]
    cls = {y: au.intersect(coloring.classes[y], dom) for y in ys}
    for y, z in itertools.combinations(ys, 2):
        w = au.shortest_accepted(au.intersect(cls[y], cls[z]))
        if w is not None:
            return CheckResult(False, "overlap", (w[0], y, z))
    covered = au.empty(p.alphabet, 1)
    for y in ys:
        covered = au.union(covered, cls[y])
    w = au.shortest_accepted(au.difference(dom, covered))
    if w is not None:
        return CheckResult(False, "uncovered", (w[0],))
    for name, k in b.signature.predicates:
        rel = au.normalize(p.relations[name])
        allowed = b.relations[name]
        for t in itertools.product(ys, repeat=k):
            if t in allowed:
                continue
            aut = rel
            for j, y in enumerate(t):
                aut = au.intersect(aut, au.expand(cls[y], [j], k))
            w = au.shortest_accepted(aut)
            if w is not None:
                return CheckResult(False, "tuple", (name, w, t))
    return CheckResult(True)


# --------------------------------------------------------- semi-procedures


@dataclass(frozen=True)
class Refuted:
    obstruction: FiniteStructure
    examined: int


def refute_hom_semi(p: Presentation, b: FiniteStructure, budget: int = 10 ** 4,
                    max_size: int = 6):
    """Search for a finite structure mapping into ``p`` but not into ``b``.

    Critical obstructions of ``b`` are tried in order of size; every
    obstruction contains one, so nothing is missed up to the size reached.
    """
    tried = set()
    examined = 0
    for n in range(1, max_size + 1):
        for d in critical_obstructions(b, n, n):
            form = st.canonical_form(d)
            if form in tried:
                continue
            tried.add(form)
            examined += 1
            if exists_hom_from_finite(p, d):
                return Refuted(d, examined)
            if examined >= budget:
                return Unknown("candidate budget exhausted", examined)
    return Unknown(f"no obstruction with at most {max_size} elements maps in", examined)


@dataclass(frozen=True)
class FoundColoring:
    coloring: RegularColoring
    examined: int


def _moore_candidates(alphabet, targets):
    """Complete labelled automata by number of states, then lexicographically."""
    n = 1
    while True:
        cells = n * len(alphabet)
        for trans in itertools.product(range(n), repeat=cells):
            delta = [{(s,): trans[q * len(alphabet) + j] for j, s in enumerate(alphabet)} for q in range(n)]
            for labs in itertools.product(targets, repeat=n):
                yield delta, labs
        n += 1


def enumerate_reghom_semi(p: Presentation, b: FiniteStructure, budget: int = 10 ** 4):
    """Try colorings given by small labelled automata until one checks out."""
    examined = 0
    for delta, labs in _moore_candidates(p.alphabet, b.domain):
        if examined >= budget:
            return Unknown("candidate budget exhausted", examined)
        examined += 1
        classes = {y: au.intersect(SyncAutomaton(1, p.alphabet, delta, 0,
                                                 [q for q, lab in enumerate(labs) if lab == y]), p.domain)
                   for y in b.domain}
        coloring = RegularColoring(p.alphabet, classes)
        if check_regular_hom(p, b, coloring):
            return FoundColoring(coloring, examined)
    return Unknown("unreachable", examined)
