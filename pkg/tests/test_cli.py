import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from autocsp import cli, textio
from autocsp import structures as st
from autocsp.structures import path

DATA = Path(__file__).resolve().parent.parent / "demos" / "data"


def d(name):
    return str(DATA / name)


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, "--json", *argv)
    return code, json.loads(out)


# ------------------------------------------------------- documented examples


def test_finite_duality_of_t2(capsys):
    code, out, _ = run(capsys, "finite-duality", d("T2.struct"))
    assert code == cli.POSITIVE
    assert "finite duality: yes" in out


def test_hc_trace_on_zigzag_five(capsys):
    code, out, _ = run(capsys, "hc", d("zigzag5.struct"), d("P2.struct"), "--trace")
    assert code == cli.NEGATIVE
    steps = [l for l in out.splitlines() if l.startswith("step ")]
    assert "={}" not in steps[6] and "={}" in steps[7]
    assert "no homomorphism" in out


def test_model_check_on_tree(capsys):
    code, out, _ = run(capsys, "mc", d("bintree.apres"), d("forall-succ.fo"))
    assert code == cli.POSITIVE and out.strip() == "true"


# -------------------------------------------------------------- finite side


def test_hom_prints_mapping(capsys):
    code, out, _ = run(capsys, "hom", d("zigzag1.struct"), d("T2.struct"))
    assert code == cli.POSITIVE
    assert "0 -> 0" in out and "5 -> 2" in out


def test_hom_negative_and_budget(capsys, tmp_path):
    assert run(capsys, "hom", d("P3.struct"), d("T2.struct"))[0] == cli.NEGATIVE
    (tmp_path / "K5.struct").write_text(textio.format_structure(st.clique(5)))
    (tmp_path / "K4.struct").write_text(textio.format_structure(st.clique(4)))
    code, out, _ = run(capsys, "hom", tmp_path / "K5.struct", tmp_path / "K4.struct", "--budget", "3")
    assert code == cli.UNKNOWN and out.startswith("unknown")


def test_core_and_feder_vardi(capsys):
    code, data = run_json(capsys, "core", d("zigzag1.struct"))
    assert code == 0 and data["is_core"] is True
    code, data = run_json(capsys, "feder-vardi", d("P2.struct"))
    fv = textio.parse_structure(data["structure"])
    assert len(fv) == 7 and len(fv.relations["E"]) == 3


def test_tree_duality_verdicts(capsys):
    assert run(capsys, "tree-duality", d("P2.struct"))[0] == cli.POSITIVE
    assert run(capsys, "tree-duality", d("K2.struct"))[0] == cli.NEGATIVE


def test_finite_duality_negative_and_guard(capsys):
    assert run(capsys, "finite-duality", d("P2.struct"))[0] == cli.NEGATIVE
    assert run(capsys, "finite-duality", d("T3.struct"), "--limit", "10")[0] == cli.UNKNOWN


def test_hc_json_fields(capsys):
    code, data = run_json(capsys, "hc", d("zigzag5.struct"), d("T2.struct"))
    assert code == cli.POSITIVE
    assert data["fixpoint_step"] == 2 and data["verdict"] == "hom"


def test_hc_unsound_target_is_unknown(capsys):
    k3 = textio.format_structure(st.clique(3))
    sys.stdin = io.StringIO(k3)
    try:
        code, _, _ = run(capsys, "hc", "-", d("K2.struct"))
    finally:
        sys.stdin = sys.__stdin__
    assert code == cli.UNKNOWN


def test_critical_obstructions(capsys):
    code, data = run_json(capsys, "critical-obstructions", d("T2.struct"), "--max-size", "4")
    assert code == 0 and data["count"] == len(data["obstructions"]) >= 1
    assert any(textio.parse_structure(t).n_tuples() == 3 for t in data["obstructions"])


def test_verify_dual(capsys):
    code, data = run_json(capsys, "verify-dual", d("T2.struct"), "--dual", d("P3.struct"), "--corpus-size", "3")
    assert code == cli.POSITIVE and data["verdict"] == "dual"
    code, data = run_json(capsys, "verify-dual", d("T2.struct"), "--dual", d("K2.struct"))
    assert code == cli.NEGATIVE and "counterexample" in data


# ------------------------------------------------------------ presentations


def test_mc_inline_formula(capsys):
    code, out, _ = run(capsys, "mc", "builtin:binary-tree", "-e", "(exists x (E x x))")
    assert code == cli.NEGATIVE and out.strip() == "false"


def test_mc_accepts_structure_files(capsys):
    tri = "(exists x (exists y (exists z (and (E x y) (E y z) (E x z)))))"
    assert run(capsys, "mc", d("T2.struct"), "-e", tri)[0] == cli.POSITIVE


def test_hom_dual(capsys):
    assert run(capsys, "hom-dual", "builtin:binary-tree", "--dual", d("P3.struct"))[0] == cli.NEGATIVE
    assert run(capsys, "hom-dual", "builtin:matching", "--dual", d("P3.struct"))[0] == cli.POSITIVE


def test_hc_auto(capsys):
    code, data = run_json(capsys, "hc-auto", d("bintree.apres"), d("T2.struct"))
    assert code == cli.NEGATIVE and data["round"] <= 4
    code, data = run_json(capsys, "hc-auto", d("matching.apres"), d("T1.struct"), "--trace")
    assert code == cli.POSITIVE and data["verdict"] == "fixpoint"
    assert "label {0}" in data["classifier"] and "label {1}" in data["classifier"]
    code, _, _ = run(capsys, "hc-auto", d("zigzag5.struct"), d("P2.struct"), "--max-rounds", "3")
    assert code == cli.UNKNOWN


def test_synth_then_check(capsys, tmp_path):
    out_file = tmp_path / "match.col"
    code, _, _ = run(capsys, "synth-reghom", d("matching.apres"), d("T1.struct"), "-o", out_file)
    assert code == cli.POSITIVE and out_file.exists()
    code, out, _ = run(capsys, "check-reghom", d("matching.apres"), d("T1.struct"), out_file)
    assert code == cli.POSITIVE and "valid" in out


def test_synth_outcomes(capsys):
    assert run(capsys, "synth-reghom", d("bintree.apres"), d("T2.struct"))[0] == cli.NEGATIVE
    assert run(capsys, "synth-reghom", d("bintree.apres"), d("K2.struct"))[0] == cli.UNKNOWN


def test_check_reports_violation(capsys, tmp_path):
    col = tmp_path / "const.col"
    col.write_text("arity 1\nalphabet 0 1\ncolors 0 1\nstate q0 initial accepting label {0}\n"
                   "trans q0 (0) q0\ntrans q0 (1) q0\n")
    code, data = run_json(capsys, "check-reghom", d("bintree.apres"), d("K2.struct"), col)
    assert code == cli.NEGATIVE and data["violation"] == "tuple"
    assert data["detail"][2] == ["0", "0"]


def test_check_rejects_foreign_colours(capsys, tmp_path):
    col = tmp_path / "bad.col"
    col.write_text("arity 1\nalphabet 0 1\ncolors 9\nstate q0 initial accepting label {9}\n"
                   "trans q0 (0) q0\ntrans q0 (1) q0\n")
    assert run(capsys, "check-reghom", d("bintree.apres"), d("K2.struct"), col)[0] == cli.INPUT_ERROR


def test_refute_and_enum(capsys):
    code, data = run_json(capsys, "refute", d("bintree.apres"), d("T2.struct"))
    assert code == cli.POSITIVE
    assert textio.parse_structure(data["obstruction"]).n_tuples() == 3
    code, data = run_json(capsys, "refute", d("T2.struct"), d("T2.struct"), "--max-size", "3")
    assert code == cli.UNKNOWN
    code, data = run_json(capsys, "enum-reghom", d("bintree.apres"), d("K2.struct"))
    assert code == cli.POSITIVE and data["examined"] <= 10 ** 4
    assert run(capsys, "enum-reghom", d("bintree.apres"), d("T2.struct"), "--budget", "20")[0] == cli.UNKNOWN


def test_gadgets(capsys):
    code, out, _ = run(capsys, "gadget", "link", d("P2.struct"))
    assert code == 0 and out.startswith("presentation")
    code, out, _ = run(capsys, "gadget", "undec", d("P3.struct"), d("P2.struct"), "--s", "", "--t", "aaa")
    p = textio.parse_presentation(out)
    assert set(p.signature.names) == {"E"} | {st.mark_name(y) for y in "012"}


# ------------------------------------------------------------- input errors


def test_missing_file_is_input_error(capsys):
    code, _, err = run(capsys, "core", "/nonexistent/x.struct")
    assert code == cli.INPUT_ERROR and "cannot read" in err


def test_parse_error_reports_position(capsys, tmp_path):
    bad = tmp_path / "bad.struct"
    bad.write_text("signature E/2\ndomain a b\nE a z\n")
    code, _, err = run(capsys, "core", bad)
    assert code == cli.INPUT_ERROR and f"{bad}:3:5:" in err


def test_unknown_builtin_and_bad_word(capsys):
    assert run(capsys, "mc", "builtin:nope", "-e", "(exists x (E x x))")[0] == cli.INPUT_ERROR
    code = run(capsys, "gadget", "undec", d("P3.struct"), d("P2.struct"), "--s", "z", "--t", "a")[0]
    assert code == cli.INPUT_ERROR


def test_bad_formula_is_input_error(capsys):
    assert run(capsys, "mc", "builtin:binary-tree", "-e", "(forall x")[0] == cli.INPUT_ERROR


def test_usage_errors_exit_three(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["bogus"])
    assert e.value.code == cli.INPUT_ERROR
    with pytest.raises(SystemExit) as e:
        cli.main(["hom", d("T2.struct")])
    assert e.value.code == cli.INPUT_ERROR


def test_module_entry_point_reads_stdin():
    text = textio.format_structure(path(3))
    proc = subprocess.run([sys.executable, "-m", "autocsp", "hom", "-", d("T2.struct")],
                          input=text, capture_output=True, text=True)
    assert proc.returncode == cli.NEGATIVE
    assert proc.stdout.strip() == "no homomorphism"
