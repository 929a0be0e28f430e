"""Line-oriented text formats for structures, automata, classifiers and presentations.

Structure files::

    signature E/2 P/1
    domain a b c
    E a b
    P c

Automaton files::

    arity 2
    alphabet 0 1
    state q0 initial
    state q1 accepting label {0,1}
    trans q0 (0,#) q1

``#`` starts a comment only at the beginning of a line, since it also
denotes padding inside letters.
"""

from __future__ import annotations

import re
from pathlib import Path

from . import automata as au
from .autohom import Classifier, RegularColoring
from .automata import PAD, SyncAutomaton
from .presentations import Presentation
from .structures import FiniteStructure, Signature, StructureError


class FormatError(ValueError):
    def __init__(self, msg, line=None, column=None, source=None):
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
            if column is not None:
                where += f"{column}:"
        super().__init__(f"{where} {msg}" if where else msg)
        self.line, self.column = line, column


def _lines(text):
    for n, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield n, raw, stripped


def _col(raw, token):
    i = raw.find(token)
    return i + 1 if i >= 0 else 1


def element_name(x) -> str:
    """A whitespace-free name for an element; tuples and sets are spelled out."""
    if isinstance(x, tuple):
        return "(" + ",".join(element_name(y) for y in x) + ")"
    if isinstance(x, frozenset):
        return "{" + ",".join(sorted(element_name(y) for y in x)) + "}"
    if isinstance(x, bool):
        return str(x).lower()
    return str(x)


# -------------------------------------------------------------- structures


def format_structure(a: FiniteStructure) -> str:
    names = {x: element_name(x) for x in a.domain}
    if len(set(names.values())) != len(names):
        raise FormatError("element names collide after formatting")
    for v in names.values():
        if not v or any(c.isspace() for c in v):
            raise FormatError(f"element name {v!r} cannot be written")
    out = [f"signature {a.signature}", "domain " + " ".join(names[x] for x in a.domain)]
    for name, t in a.all_tuples():
        out.append(" ".join([name] + [names[x] for x in t]))
    return "\n".join(out) + "\n"


def parse_structure(text: str, source=None) -> FiniteStructure:
    sig = None
    dom = None
    tuples = []
    for n, raw, line in _lines(text):
        head, *rest = line.split()
        if head == "signature":
            if sig is not None:
                raise FormatError("duplicate signature line", n, 1, source)
            preds = []
            for tok in rest:
                m = re.fullmatch(r"([^\s/]+)/(\d+)", tok)
                if not m:
                    raise FormatError(f"bad predicate declaration {tok!r}", n, _col(raw, tok), source)
                preds.append((m.group(1), int(m.group(2))))
            try:
                sig = Signature(tuple(preds))
            except StructureError as e:
                raise FormatError(str(e), n, 1, source) from None
        elif head == "domain":
            if dom is not None:
                raise FormatError("duplicate domain line", n, 1, source)
            dom = rest
            if len(set(dom)) != len(dom):
                raise FormatError("repeated domain element", n, 1, source)
        else:
            if sig is None or dom is None:
                raise FormatError("tuples must follow the signature and domain lines", n, 1, source)
            if head not in sig:
                raise FormatError(f"unknown predicate {head!r}", n, 1, source)
            if len(rest) != sig.arity(head):
                raise FormatError(f"{head} expects {sig.arity(head)} arguments, got {len(rest)}", n, 1, source)
            members = set(dom)
            for tok in rest:
                if tok not in members:
                    raise FormatError(f"{tok!r} is not in the domain", n, _col(raw, tok), source)
            tuples.append((head, tuple(rest)))
    if sig is None:
        raise FormatError("missing signature line", source=source)
    if dom is None:
        raise FormatError("missing domain line", source=source)
    rels = {name: [t for h, t in tuples if h == name] for name in sig.names}
    return FiniteStructure(sig, tuple(dom), rels)


# --------------------------------------------------------------- automata


def _letter_text(letter) -> str:
    return "(" + ",".join(letter) + ")"


def _parse_letter(tok, arity, n, raw, source):
    if tok.startswith("(") and tok.endswith(")"):
        parts = tok[1:-1].split(",") if tok[1:-1] else []
    elif arity == 1:
        parts = [tok]
    else:
        raise FormatError(f"bad letter {tok!r}", n, _col(raw, tok), source)
    if len(parts) != arity:
        raise FormatError(f"letter {tok!r} has {len(parts)} components, expected {arity}", n, _col(raw, tok), source)
    return tuple(parts)


def _parse_label(tok, n, raw, source):
    if not (tok.startswith("{") and tok.endswith("}")):
        raise FormatError(f"bad label {tok!r}", n, _col(raw, tok), source)
    body = tok[1:-1]
    return frozenset(body.split(",")) if body else frozenset()


def _parse_machine(text, source=None):
    arity = None
    alphabet = None
    states = {}
    order = []
    initial, accepting, labels = [], set(), {}
    trans = []
    colors = None
    for n, raw, line in _lines(text):
        toks = line.split()
        head = toks[0]
        if head == "arity":
            if len(toks) != 2 or not toks[1].isdigit():
                raise FormatError("arity needs one integer", n, 1, source)
            arity = int(toks[1])
        elif head == "alphabet":
            alphabet = toks[1:]
            if PAD in alphabet:
                raise FormatError(f"{PAD!r} is reserved for padding", n, _col(raw, PAD), source)
        elif head == "colors":
            colors = toks[1:]
        elif head == "state":
            if len(toks) < 2:
                raise FormatError("state needs a name", n, 1, source)
            name = toks[1]
            if name in states:
                raise FormatError(f"duplicate state {name!r}", n, _col(raw, name), source)
            states[name] = len(order)
            order.append(name)
            rest = toks[2:]
            i = 0
            while i < len(rest):
                tok = rest[i]
                if tok == "initial":
                    initial.append(states[name])
                elif tok == "accepting":
                    accepting.add(states[name])
                elif tok == "label":
                    if i + 1 >= len(rest):
                        raise FormatError("label needs a set", n, _col(raw, tok), source)
                    labels[states[name]] = _parse_label(rest[i + 1], n, raw, source)
                    i += 1
                else:
                    raise FormatError(f"unknown state attribute {tok!r}", n, _col(raw, tok), source)
                i += 1
        elif head == "trans":
            if len(toks) != 4:
                raise FormatError("trans needs: source letter target", n, 1, source)
            if arity is None:
                raise FormatError("arity must be declared before transitions", n, 1, source)
            trans.append((n, raw, toks[1], toks[2], toks[3]))
        else:
            raise FormatError(f"unknown directive {head!r}", n, 1, source)
    if arity is None:
        raise FormatError("missing arity line", source=source)
    if alphabet is None:
        raise FormatError("missing alphabet line", source=source)
    if not initial:
        raise FormatError("no initial state", source=source)
    allowed = set(alphabet) | {PAD}
    edges = []
    for n, raw, src, tok, dst in trans:
        for s in (src, dst):
            if s not in states:
                raise FormatError(f"unknown state {s!r}", n, _col(raw, s), source)
        letter = _parse_letter(tok, arity, n, raw, source)
        bad = [c for c in letter if c not in allowed]
        if bad:
            raise FormatError(f"symbol {bad[0]!r} is not in the alphabet", n, _col(raw, tok), source)
        if all(c == PAD for c in letter):
            raise FormatError("a letter cannot consist of padding only", n, _col(raw, tok), source)
        edges.append((states[src], letter, states[dst]))
    return dict(arity=arity, alphabet=alphabet, n=len(order), initial=initial, accepting=accepting,
                labels=labels, edges=edges, colors=colors)


def _deterministic(m):
    seen = set()
    for p, l, _ in m["edges"]:
        if (p, l) in seen:
            return False
        seen.add((p, l))
    return len(m["initial"]) == 1


def parse_automaton(text: str, source=None) -> SyncAutomaton:
    """Read an automaton; nondeterministic input is determinised."""
    m = _parse_machine(text, source)
    if _deterministic(m):
        delta = [{} for _ in range(m["n"])]
        for p, l, q in m["edges"]:
            delta[p][l] = q
        return SyncAutomaton(m["arity"], m["alphabet"], delta, m["initial"][0], m["accepting"])
    return au.determinize(m["arity"], m["alphabet"], m["initial"], m["accepting"], m["edges"])


def format_automaton(a: SyncAutomaton, labels=None, extra=()) -> str:
    out = [f"arity {a.arity}", "alphabet " + " ".join(a.alphabet), *extra]
    for q in range(a.n_states):
        parts = [f"state q{q}"]
        if q == a.initial:
            parts.append("initial")
        if q in a.accepting:
            parts.append("accepting")
        if labels is not None and labels[q] is not None:
            parts.append("label " + element_name(frozenset(labels[q])))
        out.append(" ".join(parts))
    for q in range(a.n_states):
        for l in sorted(a.delta[q]):
            out.append(f"trans q{q} {_letter_text(l)} q{a.delta[q][l]}")
    return "\n".join(out) + "\n"


def format_classifier(c: Classifier, extra=()) -> str:
    acc = [q for q, lab in enumerate(c.labels) if lab is not None]
    aut = SyncAutomaton(1, c.alphabet, c.delta, 0, acc)
    return format_automaton(aut, [None if lab is None else frozenset(element_name(y) for y in lab)
                                  for lab in c.labels], extra)


def parse_classifier(text: str, source=None) -> Classifier:
    """Read a labelled automaton; states without a label lie outside the domain."""
    m = _parse_machine(text, source)
    if m["arity"] != 1:
        raise FormatError("classifiers have arity 1", source=source)
    if not _deterministic(m):
        raise FormatError("classifiers must be deterministic", source=source)
    delta = [{} for _ in range(m["n"])]
    for p, l, q in m["edges"]:
        delta[p][l] = q
    labels = [m["labels"].get(q) for q in range(m["n"])]
    return Classifier(m["alphabet"], delta, labels, m["initial"][0])


def format_coloring(c: RegularColoring) -> str:
    colors = "colors " + " ".join(element_name(y) for y in c.classes)
    return format_classifier(c.as_classifier(), extra=(colors,))


def parse_coloring(text: str, source=None) -> RegularColoring:
    m = _parse_machine(text, source)
    c = parse_classifier(text, source)
    colors = m["colors"]
    if colors is None:
        colors = sorted(set().union(*c.values())) if c.values() else []
    return RegularColoring.from_classifier(c, colors)


# ----------------------------------------------------------- presentations


def format_presentation(p: Presentation) -> str:
    out = ["presentation", f"signature {p.signature}", "alphabet " + " ".join(p.alphabet), "domain"]
    out.append(format_automaton(p.domain).rstrip("\n"))
    out.append("end")
    for name in p.signature.names:
        out.append(f"relation {name}")
        out.append(format_automaton(p.relations[name]).rstrip("\n"))
        out.append("end")
    return "\n".join(out) + "\n"


def parse_presentation(text: str, source=None, base: Path | None = None) -> Presentation:
    """Read a presentation bundle.

    Automata are given inline between ``domain``/``relation NAME`` and
    ``end``, or by a path after the keyword, relative to ``base``.
    """
    lines = text.splitlines()
    sig = alphabet = dom = None
    rels = {}
    i = 0
    seen_header = False

    def block(start):
        body = []
        j = start
        while j < len(lines):
            if lines[j].strip() == "end":
                return "\n".join(body), j + 1
            body.append(lines[j])
            j += 1
        raise FormatError("unterminated block", start, 1, source)

    def load(path_tok, n):
        path = Path(path_tok)
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            return parse_automaton(path.read_text(), str(path))
        except OSError as e:
            raise FormatError(f"cannot read {path}: {e.strerror}", n, 1, source) from None

    def sub_automaton(body, start):
        try:
            return parse_automaton(body, source)
        except FormatError as e:
            line = e.line + start if e.line is not None else start
            raise FormatError(str(e).split(": ", 1)[-1].strip(), line, e.column, source) from None

    while i < len(lines):
        n = i + 1
        line = lines[i].strip()
        i += 1
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if toks[0] == "presentation":
            seen_header = True
        elif toks[0] == "signature":
            sig = parse_structure(line + "\ndomain\n", source).signature
        elif toks[0] == "alphabet":
            alphabet = tuple(toks[1:])
        elif toks[0] == "domain":
            if len(toks) > 1:
                dom = load(toks[1], n)
            else:
                body, i2 = block(i)
                dom = sub_automaton(body, i)
                i = i2
        elif toks[0] == "relation":
            if len(toks) < 2:
                raise FormatError("relation needs a predicate name", n, 1, source)
            name = toks[1]
            if len(toks) > 2:
                rels[name] = load(toks[2], n)
            else:
                body, i2 = block(i)
                rels[name] = sub_automaton(body, i)
                i = i2
        else:
            raise FormatError(f"unknown directive {toks[0]!r}", n, 1, source)
    if not seen_header:
        raise FormatError("missing 'presentation' header", source=source)
    if sig is None or dom is None:
        raise FormatError("presentation needs signature and domain", source=source)
    if alphabet is None:
        alphabet = dom.alphabet
    return Presentation(sig, tuple(alphabet), dom, rels)


def sniff(text: str) -> str:
    """Guess the kind of a file: ``presentation``, ``structure`` or ``automaton``."""
    for _, _, line in _lines(text):
        head = line.split()[0]
        if head == "presentation":
            return "presentation"
        if head in ("signature", "domain"):
            return "structure"
        if head in ("arity", "alphabet", "state", "trans"):
            return "automaton"
        break
    return "unknown"
