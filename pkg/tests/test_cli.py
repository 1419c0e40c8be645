import json
from importlib.resources import files

import pydantic
import pytest

from threefunctor.cli import EXIT_FAIL, EXIT_INVALID, EXIT_OK, EXIT_PARSE, main
from threefunctor.document import DocumentError, build, parse_document, serialize_document

EXAMPLES = files("threefunctor") / "examples"
BUNDLED = sorted(p.name for p in EXAMPLES.iterdir() if p.name.endswith(".json"))


def write(tmp_path, doc) -> str:
    path = tmp_path / "doc.json"
    path.write_text(json.dumps(doc))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name", BUNDLED)
def test_round_trip(name):
    doc = parse_document((EXAMPLES / name).read_text())
    again = parse_document(serialize_document(doc))
    assert again == doc


def test_bundled_exit_codes(capsys):
    code, out, _ = run(capsys, "verify", str(EXAMPLES / "z2_sign.json"))
    assert code == EXIT_OK and "fell-intertwiner" in out
    code, _, err = run(capsys, "verify", str(EXAMPLES / "nonunitary.json"))
    assert code == EXIT_INVALID and "stretch" in err
    code, _, _ = run(capsys, "verify", str(EXAMPLES / "small_square.json"))
    assert code == EXIT_OK


def test_parse_errors(tmp_path, capsys):
    code, _, err = run(capsys, "verify", write(tmp_path, {"version": "1", "algebras": {"A": {"size": 2, "x": 1}}}))
    assert code == EXIT_PARSE and "algebras.A.x" in err
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert main(["verify", str(bad)]) == EXIT_PARSE
    assert main(["verify", str(tmp_path / "missing.json")]) == EXIT_PARSE
    code, _, err = run(capsys, "verify", write(tmp_path, {"version": "2"}))
    assert code == EXIT_PARSE and "version" in err


def test_validation_errors_name_the_object(tmp_path, capsys):
    docs = {
        "f": {"algebras": {"A": {"size": 2}}, "homs": {"f": {"source": "A", "target": "A", "spec": [0, 5]}}},
        "g": {"algebras": {"A": {"size": 1}}, "homs": {"g": {"source": "A", "target": "Z", "spec": [0]}}},
        "M": {"algebras": {"A": {"size": 2}}, "modules": {"M": {"algebra": "A", "dims": [1]}}},
        "G": {"groupoids": {"G": {"objects": ["x"], "arrows": [{"name": "e", "source": "x", "target": "x"}],
                                  "compose": [["e", "e", "q"]]}}},
    }
    for name, doc in docs.items():
        code, _, err = run(capsys, "verify", write(tmp_path, {"version": "1", **doc}))
        assert code == EXIT_INVALID, name
        assert f"'{name}'" in err


def test_build_resolves_references():
    doc = parse_document((EXAMPLES / "small_square.json").read_text())
    inst = build(doc)
    assert inst.squares["S"].product.size == len(inst.squares["S"].pairs)
    assert inst.homs["f"].source is inst.algebras["C"]
    with pytest.raises(pydantic.ValidationError):
        parse_document('{"version": "1", "algebras": {"A": {}}}')
    doc.cond_exps["phi"].weights = [1.0, -1.0, 1.0]
    with pytest.raises(DocumentError, match="phi"):
        build(doc)


def test_explicit_groupoid_document(tmp_path, capsys):
    doc = {
        "version": "1",
        "groupoids": {"P": {"objects": ["x", "y"], "arrows": [
            {"name": "1x", "source": "x", "target": "x"}, {"name": "1y", "source": "y", "target": "y"},
            {"name": "a", "source": "x", "target": "y"}, {"name": "b", "source": "y", "target": "x"}],
            "compose": [["1x", "1x", "1x"], ["1y", "1y", "1y"], ["a", "1x", "a"], ["1y", "a", "a"],
                        ["b", "1y", "b"], ["1x", "b", "b"], ["a", "b", "1y"], ["b", "a", "1x"]]}},
        "representations": {"r": {"groupoid": "P", "dims": [1, 1], "alpha": [
            [[[1, 0]]], [[[1, 0]]], [[[0, 1]]], [[[0, -1]]]]}},
    }
    code, out, _ = run(capsys, "verify", write(tmp_path, doc))
    assert code == EXIT_OK and "fell-unitarity" in out


def test_verify_generated_is_deterministic(capsys, tmp_path):
    argv = ["verify", str(EXAMPLES / "small_square.json"), "--seed", "42", "--trials", "3", "--format", "json"]
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == code2 == EXIT_OK
    assert out1 == out2
    report = json.loads(out1)
    assert set(report["generated"]["families"]) == {"projection", "base_change", "mixed", "standard_form",
                                                    "involutive", "fell"}
    target = tmp_path / "report.json"
    assert main(argv + ["--output", str(target)]) == EXIT_OK
    capsys.readouterr()
    assert json.loads(target.read_text()) == report


def test_verify_family_selection(capsys):
    code, out, _ = run(capsys, "verify", str(EXAMPLES / "small_square.json"), "--involutive", "--format", "json")
    assert code == EXIT_OK
    checks = {r["check"] for r in json.loads(out)["document_checks"]}
    assert checks == {"dagger-involution", "dagger-adjoint", "double-dual-unitary"}


def test_fuzz_small_passes(capsys):
    code, out, _ = run(capsys, "fuzz", "--trials", "1", "--max-atoms", "1", "--max-fiber-dim", "1", "--format", "json")
    assert code == EXIT_OK
    report = json.loads(out)
    assert all(f["failures"] == 0 for f in report["families"].values())
    assert all(f["max_residual"] < 1e-12 for f in report["families"].values())


def test_fuzz_mutation_fails(capsys):
    code, out, _ = run(capsys, "fuzz", "--trials", "3", "--mutate", "dagger-conjugation", "--format", "json")
    assert code == EXIT_FAIL
    assert json.loads(out)["families"]["involutive"]["failures"] > 0


def test_tolerance_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("THREEFUNCTOR_TOL", "1e-300")
    code, _, _ = run(capsys, "fuzz", "--trials", "1", "--format", "json")
    assert code == EXIT_FAIL
    code, _, _ = run(capsys, "fuzz", "--trials", "1", "--tol", "1e-9", "--format", "json")
    assert code == EXIT_OK


def test_bad_flags(capsys):
    assert main(["fuzz", "--trials", "0"]) == EXIT_PARSE
    assert main(["fuzz", "--max-atoms", "0"]) == EXIT_PARSE
    assert main(["fuzz", "--mutate", "nope"]) == EXIT_PARSE
    assert main(["bogus"]) == EXIT_PARSE
    capsys.readouterr()


def test_explain(capsys):
    code, out, _ = run(capsys, "explain", "base-change-horizontal")
    assert code == EXIT_OK and "side by side" in out
    code, out, _ = run(capsys, "explain", "fell")
    assert code == EXIT_OK and "intertwines" in out
    code, out, _ = run(capsys, "explain", "lambda-unitary")
    assert code == EXIT_OK and "unitary" in out
    code, _, err = run(capsys, "explain", "no-such-check")
    assert code == EXIT_PARSE and "unknown" in err
