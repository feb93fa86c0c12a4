"""Exit codes and schema-validated JSON output of the pcw binary."""

import json
import os
import pathlib
import subprocess

import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

BIN = os.environ.get("PCW_BIN", "build/tools/pcw")
SCHEMAS = pathlib.Path(os.environ.get("PCW_SCHEMAS", "docs/schemas"))
ASSETS = pathlib.Path(os.environ.get("PCW_ASSETS", "assets"))
PROGRAMS = ASSETS / "programs"


def _registry():
    resources = []
    for path in SCHEMAS.glob("*.json"):
        resources.append((path.name, Resource.from_contents(json.loads(path.read_text()))))
    return Registry().with_resources(resources)


REGISTRY = _registry()


def validate(doc, schema_name):
    schema = REGISTRY.contents(schema_name)
    Draft202012Validator(schema, registry=REGISTRY).validate(doc)


def run(*args, json_out=False):
    cmd = [BIN] + (["--json"] if json_out else []) + [str(a) for a in args]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=600)
    doc = json.loads(proc.stdout) if json_out and proc.stdout.strip() else None
    return proc, doc


def weights(doc):
    return {json.dumps(e["outcome"]): (e["num"], e["den"]) for e in doc["distribution"]}


def test_dist_droll_is_uniform():
    proc, doc = run("dist", PROGRAMS / "samplers" / "droll.rml", "-n", 5, json_out=True)
    assert proc.returncode == 0, proc.stderr
    validate(doc, "dist.json")
    assert doc["residual"]["num"] == "0"
    assert sorted(weights(doc).values()) == [("1", "6")] * 6


def test_dist_drej_residual():
    proc, doc = run("dist", PROGRAMS / "samplers" / "drej.rml", "-n", 40, json_out=True)
    assert proc.returncode == 0
    validate(doc, "dist.json")
    assert (doc["residual"]["num"], doc["residual"]["den"]) == ("1", "1024")


def test_dist_omega_keeps_all_mass_residual():
    proc, doc = run("dist", PROGRAMS / "omega.rml", "-n", 100, json_out=True)
    assert proc.returncode == 0
    validate(doc, "dist.json")
    assert doc["distribution"] == []
    assert (doc["residual"]["num"], doc["residual"]["den"]) == ("1", "1")


def test_dist_is_deterministic():
    a, _ = run("dist", PROGRAMS / "samplers" / "dsim.rml", "-n", 30, json_out=True)
    b, _ = run("dist", PROGRAMS / "samplers" / "dsim.rml", "-n", 30, json_out=True)
    assert a.stdout == b.stdout


def test_dist_text_output_dual_prints():
    proc, _ = run("dist", PROGRAMS / "samplers" / "droll.rml", "-n", 5)
    assert proc.returncode == 0
    assert "1/6" in proc.stdout and "0.166666666667" in proc.stdout


def test_compare_many_to_one_pair():
    proc, doc = run("compare", PROGRAMS / "many_to_one" / "bits.rml", PROGRAMS / "many_to_one" / "direct.rml",
                    "-n", 6, "--epsilon", "0", json_out=True)
    assert proc.returncode == 0
    validate(doc, "compare.json")
    assert doc["tv"]["num"] == "0"


def test_compare_drej_droll_within_residual_slack():
    proc, doc = run("compare", PROGRAMS / "samplers" / "drej.rml", PROGRAMS / "samplers" / "droll.rml",
                    "-n", 40, "--epsilon", "0", json_out=True)
    assert proc.returncode == 0
    validate(doc, "compare.json")
    assert doc["within"] is True


def test_compare_identical_files():
    path = PROGRAMS / "samplers" / "dsim.rml"
    proc, doc = run("compare", path, path, "-n", 20, json_out=True)
    assert proc.returncode == 0
    assert doc["tv"]["num"] == "0"
    assert doc["residual_a"] == doc["residual_b"]


def test_coupling_tight_and_below(tmp_path):
    query = json.loads((PROGRAMS / "queries" / "tight.json").read_text())
    validate(query, "coupling-query.json")
    proc, doc = run("coupling", PROGRAMS / "queries" / "tight.json", json_out=True)
    assert proc.returncode == 0
    validate(doc, "coupling-verdict.json")
    assert doc["holds"] is True

    query["epsilon"] = {"num": "499999", "den": "1000000"}
    below = tmp_path / "below.json"
    below.write_text(json.dumps(query))
    proc, doc = run("coupling", below, json_out=True)
    assert proc.returncode == 1
    validate(doc, "coupling-verdict.json")
    assert doc["holds"] is False
    assert doc["witness"] == [0, 1]


@pytest.mark.parametrize("backend", ["enumeration", "maxflow"])
def test_coupling_empty_relation_fails(tmp_path, backend):
    query = json.loads((PROGRAMS / "queries" / "tight.json").read_text())
    query["relation"] = []
    path = tmp_path / "empty.json"
    path.write_text(json.dumps(query))
    proc, doc = run("coupling", path, "--backend", backend, json_out=True)
    assert proc.returncode == 1
    assert doc["holds"] is False


def test_rules_manifest_all_as_expected():
    proc, doc = run("rules", "--all", json_out=True)
    assert proc.returncode == 0, proc.stdout
    validate(doc, "rules.json")
    assert all(r["as_expected"] for r in doc["reports"])


def test_case_switching_weak():
    proc, doc = run("case", "switching-weak", "--N", 4, "--Q", 2, json_out=True)
    assert proc.returncode == 0
    validate(doc, "cases.json")
    (report,) = doc["reports"]
    assert (report["bound"]["num"], report["bound"]["den"]) == ("1", "4")
    assert report["verdict"] == "pass"


def test_case_cpa():
    proc, doc = run("case", "cpa", "--N", 3, "--Q", 2, "--msgs", "0,1", json_out=True)
    assert proc.returncode == 0
    validate(doc, "cases.json")
    (report,) = doc["reports"]
    assert (report["bound"]["num"], report["bound"]["den"]) == ("2", "3")


def test_case_inconclusive_exit_code():
    proc, doc = run("case", "many-to-one", "--n-max", 2, json_out=True)
    assert proc.returncode == 1
    validate(doc, "cases.json")
    assert doc["reports"][0]["verdict"] == "inconclusive"


def test_corpus_runner():
    proc, doc = run("corpus", "--presample", "state-step", json_out=True)
    assert proc.returncode == 0
    validate(doc, "corpus.json")
    proc, doc = run("corpus", "--presample", "fixed", "--value", 1, json_out=True)
    assert proc.returncode == 1
    validate(doc, "corpus.json")
    proc, _ = run("corpus", "--presample", "fixed", "--value", 1, "--expect", "fails")
    assert proc.returncode == 0


@pytest.mark.parametrize("args", [
    [],
    ["dist", "does-not-exist.rml"],
    ["case", "no-such-case"],
    ["rules", "--only", "no-such-id"],
    ["coupling", "does-not-exist.json"],
])
def test_usage_errors_exit_2(args):
    proc, _ = run(*args)
    assert proc.returncode == 2


def test_parse_and_link_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.rml"
    bad.write_text("let x = in")
    proc, _ = run("dist", bad)
    assert proc.returncode == 2
    assert "bad.rml:1:" in proc.stderr
    unbound = tmp_path / "unbound.rml"
    unbound.write_text("foo 3")
    proc, _ = run("dist", unbound)
    assert proc.returncode == 2
    assert "foo" in proc.stderr


def test_malformed_query_exits_2(tmp_path):
    path = tmp_path / "q.json"
    path.write_text('{"mu1": []}')
    proc, _ = run("coupling", path)
    assert proc.returncode == 2
