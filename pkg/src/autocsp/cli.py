"""Command-line front end.

Exit codes: 0 for a positive answer, 1 for a negative one, 2 when the
answer is unknown (budget or size guard), 3 for unreadable input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import automata as au
from . import autohom, duality, homset, presentations as pr, structures as st, textio
from .textio import FormatError

POSITIVE, NEGATIVE, UNKNOWN, INPUT_ERROR = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read(path: str) -> tuple[str, str]:
    if path == "-":
        return sys.stdin.read(), "<stdin>"
    try:
        return Path(path).read_text(), path
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def load_structure(path: str) -> st.FiniteStructure:
    text, src = _read(path)
    return textio.parse_structure(text, src)


def load_presentation(spec: str) -> pr.Presentation:
    """A bundle file, a structure file (presented in unary) or ``builtin:NAME``."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name not in pr.BUILTINS:
            raise InputError(f"unknown builtin {name!r}; choose from {', '.join(pr.BUILTINS)}")
        return pr.BUILTINS[name]()
    text, src = _read(spec)
    kind = textio.sniff(text)
    if kind == "structure":
        return pr.from_finite(textio.parse_structure(text, src))
    base = Path(spec).parent if spec != "-" else None
    p = textio.parse_presentation(text, src, base)
    problems = pr.validate(p)
    if problems:
        raise InputError(f"{src}: " + "; ".join(problems))
    return p


def parse_word(text: str, alphabet) -> tuple:
    if text in ("", "ε", "eps"):
        return ()
    w = tuple(text.split()) if " " in text else tuple(text)
    bad = [s for s in w if s not in alphabet]
    if bad:
        raise InputError(f"symbol {bad[0]!r} of word {text!r} is not in the alphabet")
    return w


class Output:
    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.data = {}
        self.lines = []

    def put(self, key, value, text=None):
        self.data[key] = value
        if text is not None:
            self.lines.append(text)

    def say(self, text):
        self.lines.append(text)

    def emit(self):
        if self.as_json:
            print(json.dumps(self.data, indent=2, default=str))
        else:
            for line in self.lines:
                print(line.rstrip("\n"))


def _name(x):
    return textio.element_name(x)


def _word(w):
    return au.show_word(w) or "ε"


# ---------------------------------------------------------------- commands


def cmd_hom(args, out):
    a, b = load_structure(args.source), load_structure(args.target)
    try:
        h = homset.find_hom(a, b, args.budget)
    except homset.SearchBudgetExhausted as e:
        out.put("verdict", "unknown", f"unknown: {e}")
        return UNKNOWN
    if h is None:
        out.put("verdict", "no-hom", "no homomorphism")
        return NEGATIVE
    mapping = {_name(x): _name(h[x]) for x in a.domain}
    out.put("verdict", "hom", "homomorphism")
    out.put("mapping", mapping, "\n".join(f"{x} -> {y}" for x, y in mapping.items()))
    return POSITIVE


def cmd_core(args, out):
    a = load_structure(args.structure)
    c = homset.core(a)
    out.put("core", [_name(x) for x in c.domain], textio.format_structure(c))
    out.put("is_core", len(c) == len(a))
    return POSITIVE


def cmd_feder_vardi(args, out):
    b = load_structure(args.structure)
    fv = duality.feder_vardi(b)
    out.put("structure", textio.format_structure(fv), textio.format_structure(fv))
    return POSITIVE


def cmd_tree_duality(args, out):
    b = load_structure(args.structure)
    ok, g = duality.has_tree_duality(b)
    out.put("tree_duality", ok, f"tree duality: {'yes' if ok else 'no'}")
    if ok:
        w = {_name(y): _name(g[y]) for y in g.source.domain}
        out.put("witness", w, "\n".join(f"{y} -> {z}" for y, z in w.items()))
    return POSITIVE if ok else NEGATIVE


def cmd_finite_duality(args, out):
    b = load_structure(args.structure)
    try:
        ok = duality.has_finite_duality(b, args.limit)
    except homset.SizeGuardError as e:
        out.put("finite_duality", None, f"unknown: {e}")
        return UNKNOWN
    out.put("finite_duality", ok, f"finite duality: {'yes' if ok else 'no'}")
    if ok and b.signature.is_unary():
        dual = [textio.format_structure(d) for d in duality.unary_dual(b)]
        out.put("dual", dual, "dual:\n" + "".join(dual))
    return POSITIVE if ok else NEGATIVE


def cmd_hc(args, out):
    a, b = load_structure(args.source), load_structure(args.target)
    v = duality.hc_decides(a, b)
    run = v.run
    if args.trace:
        steps = [{_name(x): sorted(_name(y) for y in f[x]) for x in a.domain} for f in run.steps]
        text = []
        for n, f in enumerate(steps):
            text.append(f"step {n}: " + " ".join(f"{x}={{{','.join(ys)}}}" for x, ys in f.items()))
        out.put("trace", steps, "\n".join(text))
    out.put("fixpoint_step", run.fixpoint_step, f"fixpoint at step {run.fixpoint_step}")
    out.put("first_empty_step", run.first_empty_step)
    out.put("sound", v.sound)
    if v.answer is None:
        out.put("verdict", "unknown", "consistent, but the target lacks tree duality: unsound")
        return UNKNOWN
    out.put("verdict", "hom" if v.answer else "no-hom", "homomorphism" if v.answer else "no homomorphism")
    return POSITIVE if v.answer else NEGATIVE


def cmd_critical(args, out):
    b = load_structure(args.structure)
    try:
        obs = duality.critical_obstructions(b, args.max_vertices or args.max_size,
                                            args.max_tuples or args.max_size, args.limit)
    except homset.SizeGuardError as e:
        out.put("verdict", "unknown", f"unknown: {e}")
        return UNKNOWN
    texts = [textio.format_structure(d) for d in obs]
    out.put("count", len(obs), f"{len(obs)} critical obstruction(s)")
    out.put("obstructions", texts, "\n".join(texts))
    return POSITIVE


def cmd_verify_dual(args, out):
    b = load_structure(args.structure)
    duals = [load_structure(p) for p in args.duals]
    corpus = []
    for n in range(1, args.corpus_size + 1):
        corpus.extend(st.all_structures(b.signature, n))
    bad = duality.verify_dual(b, duals, corpus)
    out.put("corpus", len(corpus), f"checked {len(corpus)} structures")
    if bad is None:
        out.put("verdict", "dual", "dual verified on the corpus")
        return POSITIVE
    out.put("counterexample", textio.format_structure(bad), "counterexample:\n" + textio.format_structure(bad))
    out.put("verdict", "not-dual")
    return NEGATIVE


def _formula(args):
    if args.expr is not None:
        text = args.expr
    elif args.formula is not None:
        text, _ = _read(args.formula)
    else:
        raise InputError("give a formula file or -e EXPR")
    try:
        return au.parse_formula(text)
    except au.FormulaSyntaxError as e:
        raise InputError(f"formula: {e}") from None


def cmd_mc(args, out):
    p = load_presentation(args.presentation)
    f = _formula(args)
    try:
        ok = pr.model_check(p, f)
    except (pr.PresentationError, au.AutomatonError) as e:
        raise InputError(str(e)) from None
    out.put("holds", ok, "true" if ok else "false")
    return POSITIVE if ok else NEGATIVE


def cmd_hom_dual(args, out):
    p = load_presentation(args.presentation)
    duals = [load_structure(d) for d in args.duals]
    for d in duals:
        if pr.exists_hom_from_finite(p, d):
            out.put("verdict", "no-hom", "no homomorphism: a dual member maps in")
            out.put("blocking", textio.format_structure(d), textio.format_structure(d))
            return NEGATIVE
    out.put("verdict", "hom", "homomorphism (no dual member maps in)")
    return POSITIVE


def _classifier_summary(c):
    return [(_word(c.witness(lambda lab, v=v: lab == v)), sorted(_name(y) for y in v)) for v in c.values()]


def cmd_hc_auto(args, out):
    p = load_presentation(args.presentation)
    b = load_structure(args.target)
    res = autohom.hc_auto(p, b, args.max_rounds)
    if args.trace:
        for n, c in enumerate(res.trace):
            out.say(f"round {n}: {c.n_states} states, labels "
                    + " ".join(textio.element_name(frozenset(v)) for v in sorted(c.values(), key=sorted)))
        out.put("rounds", [c.n_states for c in res.trace])
    if isinstance(res, autohom.NoHom):
        out.put("verdict", "no-hom", f"no homomorphism: {_word(res.word)} has no consistent image "
                                     f"(round {res.round})")
        out.put("word", _word(res.word))
        out.put("round", res.round)
        return NEGATIVE
    if isinstance(res, autohom.Fixpoint):
        out.put("verdict", "fixpoint", f"fixpoint at round {res.round}")
        out.put("round", res.round)
        text = textio.format_classifier(res.classifier)
        out.put("classifier", text, text)
        return POSITIVE
    out.put("verdict", "unknown", f"unknown: no verdict within {res.rounds} rounds")
    return UNKNOWN


def cmd_synth(args, out):
    p = load_presentation(args.presentation)
    b = load_structure(args.target)
    res = autohom.synth_regular_hom(p, b, args.max_rounds)
    if isinstance(res, autohom.NoHom):
        out.put("verdict", "no-hom", f"no homomorphism: {_word(res.word)} has no consistent image")
        return NEGATIVE
    if isinstance(res, autohom.Unknown):
        out.put("verdict", "unknown", f"unknown: {res.reason}")
        return UNKNOWN
    text = textio.format_coloring(res.coloring)
    if args.output:
        Path(args.output).write_text(text)
    out.put("verdict", "synthesized", "regular homomorphism synthesized")
    out.put("coloring", text, None if args.output else text)
    return POSITIVE


def cmd_check(args, out):
    p = load_presentation(args.presentation)
    b = load_structure(args.target)
    text, src = _read(args.coloring)
    c = textio.parse_coloring(text, src)
    # colours are read as names; match them against the target's elements
    lookup = {_name(y): y for y in b.domain}
    missing = [y for y in c.classes if y not in lookup]
    if missing:
        raise InputError(f"colour {missing[0]!r} is not an element of the target")
    c = autohom.RegularColoring(c.alphabet, {lookup[y]: a for y, a in c.classes.items()})
    res = autohom.check_regular_hom(p, b, c)
    if res.ok:
        out.put("verdict", "valid", "valid regular homomorphism")
        return POSITIVE
    detail = [d if not isinstance(d, tuple) else [_word(x) if isinstance(x, tuple) else x for x in d]
              for d in res.detail]
    out.put("verdict", "invalid", f"invalid: {res.kind} {detail}")
    out.put("violation", res.kind)
    out.put("detail", detail)
    return NEGATIVE


def cmd_refute(args, out):
    p = load_presentation(args.presentation)
    b = load_structure(args.target)
    res = autohom.refute_hom_semi(p, b, args.budget, args.max_size)
    out.put("examined", res.examined)
    if isinstance(res, autohom.Refuted):
        text = textio.format_structure(res.obstruction)
        out.put("verdict", "refuted", "refuted by the obstruction:")
        out.put("obstruction", text, text)
        return POSITIVE
    out.put("verdict", "unknown", f"unknown: {res.reason}")
    return UNKNOWN


def cmd_enum(args, out):
    p = load_presentation(args.presentation)
    b = load_structure(args.target)
    res = autohom.enumerate_reghom_semi(p, b, args.budget)
    out.put("examined", res.examined)
    if isinstance(res, autohom.FoundColoring):
        text = textio.format_coloring(res.coloring)
        out.put("verdict", "found", f"found after {res.examined} candidate(s)")
        out.put("coloring", text, text)
        return POSITIVE
    out.put("verdict", "unknown", f"unknown: {res.reason}")
    return UNKNOWN


def cmd_gadget(args, out):
    if args.kind == "link":
        g = load_presentation(args.inputs[0])
        p = pr.link_gadget(g)
    else:
        if len(args.inputs) != 2 or args.s is None or args.t is None:
            raise InputError("gadget undec needs A B --s WORD --t WORD")
        a = load_presentation(args.inputs[0])
        b = load_structure(args.inputs[1])
        s, t = parse_word(args.s, a.alphabet), parse_word(args.t, a.alphabet)
        try:
            p = pr.undec_gadget(a, b, s, t)
        except pr.PresentationError as e:
            raise InputError(str(e)) from None
    text = textio.format_presentation(p)
    out.put("presentation", text, text)
    return POSITIVE


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not an unknown verdict
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(INPUT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="autocsp", description=__doc__.splitlines()[0])
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        return p

    p = add("hom", cmd_hom, "search for a homomorphism between finite structures")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--budget", type=int, default=None, help="search node budget")

    p = add("core", cmd_core, "compute the core")
    p.add_argument("structure")

    p = add("feder-vardi", cmd_feder_vardi, "build the subset structure")
    p.add_argument("structure")

    p = add("tree-duality", cmd_tree_duality, "decide tree duality")
    p.add_argument("structure")

    p = add("finite-duality", cmd_finite_duality, "decide finite duality")
    p.add_argument("structure")
    p.add_argument("--limit", type=int, default=10 ** 6, help="guard on |Hom(B x B, B)|")

    p = add("hc", cmd_hc, "run hyperedge consistency on finite structures")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--trace", action="store_true")

    p = add("critical-obstructions", cmd_critical, "enumerate connected critical obstructions")
    p.add_argument("structure")
    p.add_argument("--max-size", type=int, default=4, help="bound on both vertices and tuples")
    p.add_argument("--max-vertices", type=int, help="override the vertex bound")
    p.add_argument("--max-tuples", type=int, help="override the tuple bound")
    p.add_argument("--limit", type=int, default=10 ** 6)

    p = add("verify-dual", cmd_verify_dual, "check a candidate dual on all small structures")
    p.add_argument("structure")
    p.add_argument("--dual", dest="duals", nargs="+", required=True, metavar="D")
    p.add_argument("--corpus-size", type=int, default=3, help="largest structure size in the corpus")

    p = add("mc", cmd_mc, "model-check a first-order sentence on a presentation")
    p.add_argument("presentation")
    p.add_argument("formula", nargs="?")
    p.add_argument("-e", "--expr", help="formula given inline")

    p = add("hom-dual", cmd_hom_dual, "decide a homomorphism from a presentation using a finite dual")
    p.add_argument("presentation")
    p.add_argument("--dual", dest="duals", nargs="+", required=True, metavar="D")

    p = add("hc-auto", cmd_hc_auto, "symbolic hyperedge consistency on a presentation")
    p.add_argument("presentation")
    p.add_argument("target")
    p.add_argument("--max-rounds", type=int, default=64)
    p.add_argument("--trace", action="store_true")

    p = add("synth-reghom", cmd_synth, "synthesise a regular homomorphism")
    p.add_argument("presentation")
    p.add_argument("target")
    p.add_argument("--max-rounds", type=int, default=64)
    p.add_argument("-o", "--output")

    p = add("check-reghom", cmd_check, "check a regular coloring")
    p.add_argument("presentation")
    p.add_argument("target")
    p.add_argument("coloring")

    p = add("refute", cmd_refute, "search for a finite obstruction mapping into a presentation")
    p.add_argument("presentation")
    p.add_argument("target")
    p.add_argument("--budget", type=int, default=10 ** 4)
    p.add_argument("--max-size", type=int, default=6)

    p = add("enum-reghom", cmd_enum, "search small automata for a regular homomorphism")
    p.add_argument("presentation")
    p.add_argument("target")
    p.add_argument("--budget", type=int, default=10 ** 4)

    p = add("gadget", cmd_gadget, "build the link or the marked product gadget")
    p.add_argument("kind", choices=["link", "undec"])
    p.add_argument("inputs", nargs="+")
    p.add_argument("--s")
    p.add_argument("--t")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    out = Output(args.json)
    try:
        code = args.fn(args, out)
    except (InputError, FormatError, st.StructureError, pr.PresentationError, au.AutomatonError) as e:
        print(f"error: {e}", file=sys.stderr)
        return INPUT_ERROR
    out.emit()
    return code


if __name__ == "__main__":
    sys.exit(main())
