"""Synchronous automata over convolutions of words.

A tuple of words is read in lock-step: the i-th letter of the convolution
collects the i-th symbol of every word, with ``PAD`` filling in for words
that have already ended.  A letter made only of padding never occurs, and a
coordinate that has started padding keeps padding to the end.  Such inputs
are called valid convolutions.

Automata are kept deterministic and partial (a missing transition rejects).
All operations that produce automata return ones accepting only valid
convolutions, so complementation is always taken relative to them.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Mapping, Sequence

PAD = "#"

Word = tuple
Letter = tuple


class AutomatonError(ValueError):
    pass


def as_word(w) -> Word:
    return tuple(w)


def show_word(w: Word) -> str:
    if all(isinstance(s, str) and len(s) == 1 for s in w):
        return "".join(w)
    return " ".join(map(str, w))


@lru_cache(maxsize=None)
def letters(alphabet: tuple, arity: int) -> tuple:
    """All letters of the given arity except the all-padding one, sorted."""
    syms = (PAD,) + tuple(alphabet)
    out = [l for l in itertools.product(syms, repeat=arity) if any(s != PAD for s in l)]
    return tuple(sorted(out))


def convolve(words: Sequence) -> list:
    words = [as_word(w) for w in words]
    n = max((len(w) for w in words), default=0)
    return [tuple(w[i] if i < len(w) else PAD for w in words) for i in range(n)]


def deconvolve(conv: Sequence[Letter], arity: int) -> tuple:
    return tuple(tuple(l[j] for l in conv if l[j] != PAD) for j in range(arity))


def is_valid_convolution(conv: Sequence[Letter], arity: int) -> bool:
    ended = [False] * arity
    for l in conv:
        if len(l) != arity or all(s == PAD for s in l):
            return False
        for j, s in enumerate(l):
            if s == PAD:
                ended[j] = True
            elif ended[j]:
                return False
    return True


def _pad_mask(letter) -> int:
    m = 0
    for j, s in enumerate(letter):
        if s == PAD:
            m |= 1 << j
    return m


class SyncAutomaton:
    """A deterministic synchronous automaton.

    ``delta[q]`` maps letters to successor states; states are ``0..n-1``.
    """

    __slots__ = ("arity", "alphabet", "delta", "initial", "accepting", "_canon")

    def __init__(self, arity: int, alphabet: Iterable, delta: Sequence[Mapping], initial: int,
                 accepting: Iterable[int]):
        self.arity = int(arity)
        self.alphabet = tuple(sorted(set(alphabet)))
        if PAD in self.alphabet:
            raise AutomatonError(f"{PAD!r} is reserved for padding")
        self.delta = tuple(dict(d) for d in delta)
        self.initial = int(initial)
        self.accepting = frozenset(accepting)
        self._canon = None
        n = len(self.delta)
        if not 0 <= self.initial < n:
            raise AutomatonError("initial state out of range")
        allowed = set(self.alphabet) | {PAD}
        for d in self.delta:
            for l, q in d.items():
                if len(l) != self.arity or not set(l) <= allowed or not 0 <= q < n:
                    raise AutomatonError(f"bad transition on {l!r}")
        if not self.accepting <= set(range(n)):
            raise AutomatonError("accepting state out of range")

    @property
    def n_states(self) -> int:
        return len(self.delta)

    def run(self, conv: Sequence[Letter]):
        q = self.initial
        for l in conv:
            q = self.delta[q].get(l)
            if q is None:
                return None
        return q

    def accepts(self, words: Sequence) -> bool:
        if len(words) != self.arity:
            raise AutomatonError(f"expected {self.arity} words, got {len(words)}")
        conv = convolve(words)
        return self.run(conv) in self.accepting

    def __repr__(self):
        return f"SyncAutomaton(arity={self.arity}, states={self.n_states}, alphabet={self.alphabet})"

    def __eq__(self, other):
        if not isinstance(other, SyncAutomaton):
            return NotImplemented
        return (self.arity, self.alphabet, self.delta, self.initial, self.accepting) == \
               (other.arity, other.alphabet, other.delta, other.initial, other.accepting)

    def __hash__(self):
        return hash((self.arity, self.alphabet, self.initial, self.accepting, len(self.delta)))

    def canonical(self) -> "SyncAutomaton":
        if self._canon is None:
            self._canon = canonical(self)
        return self._canon


# ----------------------------------------------------------- construction


def _explore(start, step: Callable, accept: Callable, arity, alphabet) -> SyncAutomaton:
    """Build a DFA by exploring hashable states reachable from ``start``.

    ``step(state)`` yields ``(letter, successor)`` pairs with at most one
    successor per letter.
    """
    ids = {start: 0}
    order = [start]
    delta = []
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        row = {}
        for l, t in step(s):
            if t not in ids:
                ids[t] = len(order)
                order.append(t)
            row[l] = ids[t]
        delta.append(row)
    acc = [ids[s] for s in order if accept(s)]
    return SyncAutomaton(arity, alphabet, delta, 0, acc)


def determinize(arity: int, alphabet, initials: Iterable, accepting: Iterable,
                transitions: Iterable[tuple]) -> SyncAutomaton:
    """Subset construction from an explicit nondeterministic transition list."""
    succ = {}
    for p, l, q in transitions:
        succ.setdefault(p, {}).setdefault(tuple(l), set()).add(q)
    accepting = set(accepting)

    def step(S):
        out = {}
        for p in S:
            for l, qs in succ.get(p, {}).items():
                out.setdefault(l, set()).update(qs)
        for l in sorted(out):
            yield l, frozenset(out[l])

    return _explore(frozenset(initials), step, lambda S: bool(S & accepting), arity, alphabet)


@lru_cache(maxsize=None)
def valid(alphabet: tuple, arity: int) -> SyncAutomaton:
    """Accepts exactly the valid convolutions of the given arity."""
    ls = letters(alphabet, arity)

    def step(ended):
        for l in ls:
            m = _pad_mask(l)
            if m & ended == ended:
                yield l, m
    return _explore(0, step, lambda s: True, arity, alphabet)


def universal(alphabet, arity: int) -> SyncAutomaton:
    return valid(tuple(sorted(alphabet)), arity)


def empty(alphabet, arity: int) -> SyncAutomaton:
    return SyncAutomaton(arity, alphabet, [{}], 0, [])


def from_tuples(alphabet, arity: int, tuples: Iterable[Sequence]) -> SyncAutomaton:
    """A trie accepting exactly the given finite set of word tuples."""
    trie = [{}]
    acc = set()
    for t in tuples:
        if len(t) != arity:
            raise AutomatonError(f"tuple {t!r} does not have arity {arity}")
        q = 0
        for l in convolve(t):
            nxt = trie[q].get(l)
            if nxt is None:
                nxt = len(trie)
                trie.append({})
                trie[q][l] = nxt
            q = nxt
        acc.add(q)
    return SyncAutomaton(arity, alphabet, trie, 0, acc)


def _check_compatible(a: SyncAutomaton, b: SyncAutomaton):
    if a.arity != b.arity or a.alphabet != b.alphabet:
        raise AutomatonError(f"incompatible automata: {a} and {b}")


# -------------------------------------------------------- boolean operations


def intersect(a: SyncAutomaton, b: SyncAutomaton) -> SyncAutomaton:
    _check_compatible(a, b)

    def step(s):
        p, q = s
        dq = b.delta[q]
        for l, p2 in a.delta[p].items():
            q2 = dq.get(l)
            if q2 is not None:
                yield l, (p2, q2)
    return trim(_explore((a.initial, b.initial), step,
                         lambda s: s[0] in a.accepting and s[1] in b.accepting, a.arity, a.alphabet))


def union(a: SyncAutomaton, b: SyncAutomaton) -> SyncAutomaton:
    _check_compatible(a, b)

    def step(s):
        p, q = s
        da = a.delta[p] if p is not None else {}
        db = b.delta[q] if q is not None else {}
        for l in sorted(set(da) | set(db)):
            yield l, (da.get(l), db.get(l))
    return trim(_explore((a.initial, b.initial), step,
                         lambda s: s[0] in a.accepting or s[1] in b.accepting, a.arity, a.alphabet))


def complement(a: SyncAutomaton) -> SyncAutomaton:
    """Valid convolutions rejected by ``a``."""
    ls = letters(a.alphabet, a.arity)

    def step(s):
        q, ended = s
        dq = a.delta[q] if q is not None else {}
        for l in ls:
            m = _pad_mask(l)
            if m & ended == ended:
                yield l, (dq.get(l), m)
    return trim(_explore((a.initial, 0), step, lambda s: s[0] not in a.accepting,
                         a.arity, a.alphabet))


def difference(a: SyncAutomaton, b: SyncAutomaton) -> SyncAutomaton:
    return intersect(a, complement(b))


def normalize(a: SyncAutomaton) -> SyncAutomaton:
    """Restrict to valid convolutions."""
    return intersect(a, valid(a.alphabet, a.arity))


# ------------------------------------------------- projection and expansion


def _project(a: SyncAutomaton, keep: Sequence[int]) -> SyncAutomaton:
    keep = tuple(keep)
    # states that reach acceptance while every kept coordinate pads
    tail = set(a.accepting)
    changed = True
    while changed:
        changed = False
        for q, row in enumerate(a.delta):
            if q in tail:
                continue
            for l, q2 in row.items():
                if q2 in tail and all(l[j] == PAD for j in keep):
                    tail.add(q)
                    changed = True
                    break
    grouped = []
    for row in a.delta:
        g = {}
        for l, q2 in row.items():
            r = tuple(l[j] for j in keep)
            if any(s != PAD for s in r):
                g.setdefault(r, set()).add(q2)
        grouped.append(g)

    def step(S):
        out = {}
        for q in S:
            for r, qs in grouped[q].items():
                out.setdefault(r, set()).update(qs)
        for r in sorted(out):
            yield r, frozenset(out[r])
    return _explore(frozenset([a.initial]), step, lambda S: bool(S & tail), len(keep), a.alphabet)


def project(a: SyncAutomaton, keep: Sequence[int]) -> SyncAutomaton:
    """Existentially quantify away every coordinate not listed in ``keep``.

    The result reads the kept coordinates in the listed order.  Columns in
    which every kept word has already ended become silent, which is why the
    acceptance condition looks ahead through such columns.
    """
    keep = list(keep)
    if not keep:
        raise AutomatonError("projection needs at least one kept coordinate")
    if len(set(keep)) != len(keep) or not all(0 <= j < a.arity for j in keep):
        raise AutomatonError(f"bad coordinates {keep} for arity {a.arity}")
    return _project(a, keep)


def project_all(a: SyncAutomaton) -> bool:
    """Whether ``a`` accepts anything, i.e. projection onto no coordinates."""
    return not is_empty(a)


def expand(a: SyncAutomaton, positions: Sequence[int], arity: int) -> SyncAutomaton:
    """Place coordinate ``j`` of ``a`` at ``positions[j]`` among ``arity`` coordinates.

    Coordinates not hit are unconstrained.  Once the original words have all
    ended the automaton waits in a tail phase while the fresh words finish.
    """
    positions = tuple(positions)
    if len(positions) != a.arity or len(set(positions)) != len(positions) \
            or not all(0 <= p < arity for p in positions):
        raise AutomatonError(f"bad positions {positions} for arity {arity}")
    ls = letters(a.alphabet, arity)
    sub_of = {l: tuple(l[p] for p in positions) for l in ls}

    def step(s):
        q, in_tail, ended = s
        for l in ls:
            m = _pad_mask(l)
            if m & ended != ended:
                continue
            sub = sub_of[l]
            if all(x == PAD for x in sub):
                if in_tail or q in a.accepting:
                    yield l, (q, True, m)
            elif not in_tail:
                q2 = a.delta[q].get(sub)
                if q2 is not None:
                    yield l, (q2, False, m)
    return trim(_explore((a.initial, False, 0), step, lambda s: s[1] or s[0] in a.accepting,
                         arity, a.alphabet))


def cylindrify(a: SyncAutomaton, new_positions: Sequence[int]) -> SyncAutomaton:
    """Insert unconstrained coordinates at the given positions of the result."""
    arity = a.arity + len(new_positions)
    fresh = set(new_positions)
    if len(fresh) != len(new_positions) or not all(0 <= p < arity for p in fresh):
        raise AutomatonError(f"bad insertion positions {new_positions}")
    old = [p for p in range(arity) if p not in fresh]
    return expand(a, old, arity)


# ---------------------------------------------------------------- analysis


def trim(a: SyncAutomaton) -> SyncAutomaton:
    """Drop states that are unreachable or cannot reach acceptance."""
    rev = [set() for _ in a.delta]
    for q, row in enumerate(a.delta):
        for q2 in row.values():
            rev[q2].add(q)
    live = set(a.accepting)
    stack = list(live)
    while stack:
        q = stack.pop()
        for p in rev[q]:
            if p not in live:
                live.add(p)
                stack.append(p)
    if a.initial not in live:
        return empty(a.alphabet, a.arity)
    ids = {a.initial: 0}
    order = [a.initial]
    i = 0
    while i < len(order):
        q = order[i]
        i += 1
        for l in sorted(a.delta[q]):
            q2 = a.delta[q][l]
            if q2 in live and q2 not in ids:
                ids[q2] = len(order)
                order.append(q2)
    delta = [{l: ids[q2] for l, q2 in a.delta[q].items() if q2 in ids} for q in order]
    return SyncAutomaton(a.arity, a.alphabet, delta, 0, [ids[q] for q in order if q in a.accepting])


def moore_minimize(delta: Sequence[Mapping], initial: int, labels: Sequence[Hashable]):
    """Minimise a partial deterministic machine with state outputs.

    Missing transitions go to an implicit sink labelled ``None``.  Returns
    ``(delta, labels)`` of the minimal machine, renumbered in breadth-first
    order from the initial state (state 0), with letters visited in sorted
    order.  Transitions into the sink class are dropped.  The result is a
    canonical form: equal behaviour gives identical output.
    """
    n = len(delta)
    sink = n
    full = [dict(d) for d in delta] + [{}]
    labs = list(labels) + [None]
    alph = sorted({l for d in delta for l in d})
    lab_rank = {}
    cls = []
    for x in labs:
        cls.append(lab_rank.setdefault(x, len(lab_rank)))
    while True:
        sigs = {}
        new = []
        for q in range(n + 1):
            row = full[q]
            sig = (cls[q], tuple(cls[row.get(l, sink)] for l in alph))
            new.append(sigs.setdefault(sig, len(sigs)))
        if len(sigs) == len(set(cls)):
            cls = new
            break
        cls = new
    sink_cls = cls[sink]
    rep = {}
    for q in range(n + 1):
        rep.setdefault(cls[q], q)
    ids = {cls[initial]: 0}
    order = [cls[initial]]
    out_delta = []
    i = 0
    while i < len(order):
        c = order[i]
        i += 1
        row = {}
        q = rep[c]
        for l in alph:
            c2 = cls[full[q].get(l, sink)]
            if c2 == sink_cls:
                continue
            if c2 not in ids:
                ids[c2] = len(order)
                order.append(c2)
            row[l] = ids[c2]
        out_delta.append(row)
    out_labels = [labs[rep[c]] for c in order]
    return out_delta, out_labels


def canonical(a: SyncAutomaton) -> SyncAutomaton:
    """The minimal automaton, numbered canonically."""
    a = trim(a)
    labels = [q in a.accepting for q in range(a.n_states)]
    delta, labs = moore_minimize(a.delta, a.initial, [True if x else None for x in labels])
    acc = [i for i, x in enumerate(labs) if x]
    return SyncAutomaton(a.arity, a.alphabet, delta, 0, acc)


minimize = canonical


def is_empty(a: SyncAutomaton) -> bool:
    return shortest_accepted(a) is None


def shortest_accepted(a: SyncAutomaton):
    """A shortest accepted word tuple (least letters first), or ``None``."""
    prev = {a.initial: None}
    q0 = deque([a.initial])
    while q0:
        q = q0.popleft()
        if q in a.accepting:
            conv = []
            while prev[q] is not None:
                p, l = prev[q]
                conv.append(l)
                q = p
            return deconvolve(conv[::-1], a.arity)
        for l in sorted(a.delta[q]):
            q2 = a.delta[q][l]
            if q2 not in prev:
                prev[q2] = (q, l)
                q0.append(q2)
    return None


def equivalent(a: SyncAutomaton, b: SyncAutomaton) -> bool:
    _check_compatible(a, b)
    return a.canonical() == b.canonical()


def is_finite(a: SyncAutomaton) -> bool:
    """True when the accepted language is finite."""
    a = trim(a)
    color = [0] * a.n_states

    def dfs(q):
        color[q] = 1
        for q2 in a.delta[q].values():
            if color[q2] == 1 or (color[q2] == 0 and not dfs(q2)):
                return False
        color[q] = 2
        return True

    import sys
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10 * a.n_states + 100))
    try:
        return a.n_states == 0 or dfs(a.initial)
    finally:
        sys.setrecursionlimit(limit)


def accepted_tuples(a: SyncAutomaton, max_count: int = 10 ** 6) -> list:
    """All accepted word tuples of a finite language, in shortlex order of convolutions."""
    if not is_finite(a):
        raise AutomatonError("language is infinite")
    a = trim(a)
    out = []
    level = [(a.initial, ())]
    while level:
        nxt = []
        for q, conv in level:
            if q in a.accepting:
                out.append(deconvolve(conv, a.arity))
                if len(out) > max_count:
                    raise AutomatonError(f"more than {max_count} accepted tuples")
            for l in sorted(a.delta[q]):
                nxt.append((a.delta[q][l], conv + (l,)))
        level = nxt
    return out


def words_up_to(a: SyncAutomaton, max_length: int) -> list:
    """Accepted tuples whose convolution has at most ``max_length`` letters."""
    out = []
    level = [(a.initial, ())]
    for depth in range(max_length + 1):
        nxt = []
        for q, conv in level:
            if q in a.accepting:
                out.append(deconvolve(conv, a.arity))
            if depth < max_length:
                for l in sorted(a.delta[q]):
                    nxt.append((a.delta[q][l], conv + (l,)))
        level = nxt
    return out


# ------------------------------------------------------- base predicates


def equality(alphabet, arity: int = 2) -> SyncAutomaton:
    """All coordinates carry the same word."""
    alphabet = tuple(sorted(alphabet))
    return SyncAutomaton(arity, alphabet, [{(s,) * arity: 0 for s in alphabet}], 0, [0])


def last_letter(alphabet, letter) -> SyncAutomaton:
    """Words ending with ``letter``."""
    alphabet = tuple(sorted(alphabet))
    if letter not in alphabet:
        raise AutomatonError(f"{letter!r} is not in the alphabet")
    delta = [{(s,): (1 if s == letter else 0) for s in alphabet} for _ in range(2)]
    return SyncAutomaton(1, alphabet, delta, 0, [1])


def equal_length(alphabet) -> SyncAutomaton:
    alphabet = tuple(sorted(alphabet))
    return SyncAutomaton(2, alphabet, [{(s, t): 0 for s in alphabet for t in alphabet}], 0, [0])


def prefix(alphabet) -> SyncAutomaton:
    """The first word is a prefix of the second."""
    alphabet = tuple(sorted(alphabet))
    delta = [{(s, s): 0 for s in alphabet}, {}]
    delta[0].update({(PAD, s): 1 for s in alphabet})
    delta[1].update({(PAD, s): 1 for s in alphabet})
    return SyncAutomaton(2, alphabet, delta, 0, [0, 1])


# ------------------------------------------------------------ FO formulas


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple


@dataclass(frozen=True)
class Equal:
    left: str
    right: str


@dataclass(frozen=True)
class EqualLength:
    left: str
    right: str


@dataclass(frozen=True)
class Prefix:
    left: str
    right: str


@dataclass(frozen=True)
class LastLetter:
    letter: str
    var: str


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    body: object


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class Forall:
    var: str
    body: object


TRUE = Const(True)
FALSE = Const(False)


def free_vars(f) -> frozenset:
    if isinstance(f, Rel):
        return frozenset(f.args)
    if isinstance(f, (Equal, EqualLength, Prefix)):
        return frozenset((f.left, f.right))
    if isinstance(f, LastLetter):
        return frozenset((f.var,))
    if isinstance(f, Const):
        return frozenset()
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_vars(p) for p in f.parts))
    if isinstance(f, Implies):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def free_order(f, bound=frozenset()) -> list:
    """Free variables in order of first occurrence, reading left to right."""
    if isinstance(f, Rel):
        vs = list(f.args)
    elif isinstance(f, (Equal, EqualLength, Prefix)):
        vs = [f.left, f.right]
    elif isinstance(f, LastLetter):
        vs = [f.var]
    elif isinstance(f, Const):
        vs = []
    elif isinstance(f, Not):
        vs = free_order(f.body, bound)
    elif isinstance(f, (And, Or)):
        vs = [v for p in f.parts for v in free_order(p, bound)]
    elif isinstance(f, Implies):
        vs = free_order(f.left, bound) + free_order(f.right, bound)
    elif isinstance(f, (Exists, Forall)):
        vs = free_order(f.body, bound | {f.var})
    else:
        raise TypeError(f"not a formula: {f!r}")
    return list(dict.fromkeys(v for v in vs if v not in bound))


def exists_many(variables: Iterable[str], body):
    for v in reversed(list(variables)):
        body = Exists(v, body)
    return body


class FormulaSyntaxError(ValueError):
    def __init__(self, msg, pos=None):
        super().__init__(msg if pos is None else f"{msg} at offset {pos}")
        self.pos = pos


def _tokens(text: str):
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            yield c, i
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j], i
            i = j


def parse_formula(text: str):
    """Parse the prefix s-expression syntax, e.g. ``(exists y (and (E x y) (not (= x y))))``."""
    toks = list(_tokens(text))
    pos = 0

    def expect(tok):
        nonlocal pos
        if pos >= len(toks) or toks[pos][0] != tok:
            where = toks[pos][1] if pos < len(toks) else len(text)
            raise FormulaSyntaxError(f"expected {tok!r}", where)
        pos += 1

    def atom():
        nonlocal pos
        if pos >= len(toks) or toks[pos][0] in "()":
            where = toks[pos][1] if pos < len(toks) else len(text)
            raise FormulaSyntaxError("expected a name", where)
        pos += 1
        return toks[pos - 1][0]

    def formula():
        nonlocal pos
        if pos >= len(toks):
            raise FormulaSyntaxError("unexpected end of input", len(text))
        tok, where = toks[pos]
        if tok == "true":
            pos += 1
            return TRUE
        if tok == "false":
            pos += 1
            return FALSE
        expect("(")
        head = atom()
        if head == "not":
            out = Not(formula())
        elif head in ("and", "or"):
            parts = []
            while pos < len(toks) and toks[pos][0] != ")":
                parts.append(formula())
            out = (And if head == "and" else Or)(tuple(parts))
        elif head == "implies":
            out = Implies(formula(), formula())
        elif head in ("exists", "forall"):
            if pos < len(toks) and toks[pos][0] == "(":
                pos += 1
                names = []
                while pos < len(toks) and toks[pos][0] != ")":
                    names.append(atom())
                expect(")")
            else:
                names = [atom()]
            body = formula()
            for v in reversed(names):
                body = Exists(v, body) if head == "exists" else Forall(v, body)
            out = body
        elif head in ("=", "eqlen", "prefix"):
            x, y = atom(), atom()
            out = {"=": Equal, "eqlen": EqualLength, "prefix": Prefix}[head](x, y)
        elif head == "last":
            out = LastLetter(atom(), atom())
        else:
            args = []
            while pos < len(toks) and toks[pos][0] != ")":
                args.append(atom())
            out = Rel(head, tuple(args))
        expect(")")
        return out

    f = formula()
    if pos != len(toks):
        raise FormulaSyntaxError("trailing input", toks[pos][1])
    return f


def format_formula(f) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Rel):
        return "(" + " ".join((f.name,) + f.args) + ")"
    if isinstance(f, Equal):
        return f"(= {f.left} {f.right})"
    if isinstance(f, EqualLength):
        return f"(eqlen {f.left} {f.right})"
    if isinstance(f, Prefix):
        return f"(prefix {f.left} {f.right})"
    if isinstance(f, LastLetter):
        return f"(last {f.letter} {f.var})"
    if isinstance(f, Not):
        return f"(not {format_formula(f.body)})"
    if isinstance(f, And):
        return "(and" + "".join(" " + format_formula(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or" + "".join(" " + format_formula(p) for p in f.parts) + ")"
    if isinstance(f, Implies):
        return f"(implies {format_formula(f.left)} {format_formula(f.right)})"
    if isinstance(f, Exists):
        return f"(exists {f.var} {format_formula(f.body)})"
    if isinstance(f, Forall):
        return f"(forall {f.var} {format_formula(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def miniscope(f):
    """Push existential quantifiers into the conjuncts that mention their variable."""
    if isinstance(f, Not):
        return Not(miniscope(f.body))
    if isinstance(f, And):
        parts = []
        for p in (miniscope(p) for p in f.parts):
            parts.extend(p.parts if isinstance(p, And) else [p])
        return And(tuple(parts))
    if isinstance(f, Or):
        return Or(tuple(miniscope(p) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(miniscope(f.left), miniscope(f.right))
    if isinstance(f, Forall):
        return Forall(f.var, miniscope(f.body))
    if isinstance(f, Exists):
        body = miniscope(f.body)
        if isinstance(body, Or):
            return Or(tuple(miniscope(Exists(f.var, p)) for p in body.parts))
        if isinstance(body, And):
            inside = [p for p in body.parts if f.var in free_vars(p)]
            outside = [p for p in body.parts if f.var not in free_vars(p)]
            if outside and inside:
                inner = inside[0] if len(inside) == 1 else And(tuple(inside))
                return And(tuple(outside) + (miniscope(Exists(f.var, inner)),))
        return Exists(f.var, body)
    return f


class _Compiler:
    def __init__(self, env, alphabet, domain):
        self.env = env
        self.alphabet = alphabet
        self.domain = domain
        self.rank = {}
        self.fresh = 0

    def order(self, vs):
        return tuple(sorted(set(vs), key=self.rank.__getitem__))

    def lift(self, vs, aut, target):
        """Re-express an automaton over variables ``vs`` over ``target`` (a superset)."""
        if vs == target:
            return aut
        return canonical(expand(aut, [target.index(v) for v in vs], len(target)))

    def base(self, vs, aut):
        """``aut`` reads coordinates bound to ``vs``, possibly repeated."""
        distinct = list(dict.fromkeys(vs))
        if len(distinct) < len(vs):
            eq = equality(self.alphabet)
            first = {v: vs.index(v) for v in distinct}
            for j, v in enumerate(vs):
                if first[v] != j:
                    aut = intersect(aut, expand(eq, [first[v], j], len(vs)))
            aut = _project(aut, [first[v] for v in distinct])
        target = self.order(distinct)
        aut = canonical(aut)
        if tuple(distinct) != target:
            aut = canonical(expand(aut, [target.index(v) for v in distinct], len(target)))
        return target, aut

    def rename(self, f, scope):
        """Give every bound variable a distinct name and record variable ranks."""
        if isinstance(f, Rel):
            return Rel(f.name, tuple(scope.get(v, v) for v in f.args))
        if isinstance(f, (Equal, EqualLength, Prefix)):
            return type(f)(scope.get(f.left, f.left), scope.get(f.right, f.right))
        if isinstance(f, LastLetter):
            return LastLetter(f.letter, scope.get(f.var, f.var))
        if isinstance(f, Const):
            return f
        if isinstance(f, Not):
            return Not(self.rename(f.body, scope))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(self.rename(p, scope) for p in f.parts))
        if isinstance(f, Implies):
            return Implies(self.rename(f.left, scope), self.rename(f.right, scope))
        if isinstance(f, (Exists, Forall)):
            self.fresh += 1
            new = f"{f.var}~{self.fresh}"
            self.rank[new] = len(self.rank)
            return type(f)(new, self.rename(f.body, {**scope, f.var: new}))
        raise TypeError(f"not a formula: {f!r}")

    def run(self, f):
        if isinstance(f, Const):
            aut = universal(self.alphabet, 0) if f.value else empty(self.alphabet, 0)
            return (), aut
        if isinstance(f, Rel):
            if f.name not in self.env:
                raise AutomatonError(f"no automaton for predicate {f.name!r}")
            aut = self.env[f.name]
            if aut.arity != len(f.args):
                raise AutomatonError(f"{f.name} has arity {aut.arity}, used with {len(f.args)}")
            return self.base(f.args, aut)
        if isinstance(f, Equal):
            return self.base((f.left, f.right), equality(self.alphabet))
        if isinstance(f, EqualLength):
            return self.base((f.left, f.right), equal_length(self.alphabet))
        if isinstance(f, Prefix):
            return self.base((f.left, f.right), prefix(self.alphabet))
        if isinstance(f, LastLetter):
            return self.base((f.var,), last_letter(self.alphabet, f.letter))
        if isinstance(f, Not):
            vs, aut = self.run(f.body)
            return vs, canonical(complement(aut))
        if isinstance(f, Implies):
            return self.run(Or((Not(f.left), f.right)))
        if isinstance(f, (And, Or)):
            if not f.parts:
                return self.run(Const(isinstance(f, And)))
            results = [self.run(p) for p in f.parts]
            target = self.order(v for vs, _ in results for v in vs)
            op = intersect if isinstance(f, And) else union
            acc = None
            for vs, aut in results:
                aut = self.lift(vs, aut, target)
                acc = aut if acc is None else canonical(op(acc, aut))
            return target, acc
        if isinstance(f, Forall):
            return self.run(Not(Exists(f.var, Not(f.body))))
        if isinstance(f, Exists):
            vs, aut = self.run(f.body)
            if self.domain is not None and is_empty(self.domain):
                return vs, empty(self.alphabet, len(vs))
            if f.var not in vs:
                return vs, aut
            i = vs.index(f.var)
            if self.domain is not None:
                aut = intersect(aut, expand(self.domain, [i], len(vs)))
            keep = [j for j in range(len(vs)) if j != i]
            return vs[:i] + vs[i + 1:], canonical(_project(aut, keep))
        raise TypeError(f"not a formula: {f!r}")


def compile_formula(formula, env: Mapping[str, SyncAutomaton], order: Sequence[str] | None = None,
                    alphabet=None, domain: SyncAutomaton | None = None):
    """Compile a first-order formula into a synchronous automaton.

    ``env`` interprets relation symbols; ``order`` fixes which coordinate
    each free variable occupies and defaults to order of first occurrence.  With ``domain`` given, quantifiers and
    free variables range over its language instead of all words.  A
    sentence compiled with an empty ``order`` yields a boolean.
    """
    if isinstance(formula, str):
        formula = parse_formula(formula)
    if alphabet is None:
        alphabets = {a.alphabet for a in env.values()} | ({domain.alphabet} if domain else set())
        if len(alphabets) != 1:
            raise AutomatonError("cannot infer a single alphabet")
        alphabet = alphabets.pop()
    alphabet = tuple(sorted(alphabet))
    order = tuple(free_order(formula) if order is None else order)
    missing = free_vars(formula) - set(order)
    if missing:
        raise AutomatonError(f"free variables {sorted(missing)} are not in the variable order")
    comp = _Compiler(env, alphabet, domain)
    for v in order:
        comp.rank[v] = len(comp.rank)
    body = miniscope(comp.rename(formula, {}))
    vs, aut = comp.run(body)
    if not order:
        return not is_empty(aut)
    aut = comp.lift(vs, aut, order)
    if domain is not None:
        for i in range(len(order)):
            aut = intersect(aut, expand(domain, [i], len(order)))
    return canonical(aut)
