import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from sdv.cli import main
from sdv.rdf import isomorphic, parse_turtle

from .conftest import EXPECTED, GOLDEN, PATIENT, copy_golden

RULES = GOLDEN / "entities" / "omop" / "person" / "rules.n3"


@pytest.fixture
def runner():
    return CliRunner()


def test_run_writes_canonical_turtle(runner, expected, tmp_path):
    out = tmp_path / "person.ttl"
    res = runner.invoke(main, ["run", "omop/person", "-p", f"patient_uri={PATIENT}", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert isomorphic(parse_turtle(out.read_text()), expected["application"])
    again = runner.invoke(main, ["run", "omop/person", "-p", f"patient_uri={PATIENT}"])
    assert again.output == out.read_text()


def test_run_and_verify_proof(runner, tmp_path):
    demo, proof = tmp_path / "demo.ttl", tmp_path / "proof.json"
    assert runner.invoke(main, ["run", "demographics", "-p", f"patient_uri={PATIENT}", "--out", str(demo)]).exit_code == 0
    res = runner.invoke(main, ["run", "omop/person", "-p", f"patient_uri={PATIENT}", "--proof-out", str(proof)])
    assert res.exit_code == 0
    ok = runner.invoke(main, ["verify", "--proof", str(proof), "--rules", str(RULES), "--input", str(demo)])
    assert ok.exit_code == 0 and ok.output.strip() == "valid"

    wrong = tmp_path / "rules.n3"
    wrong.write_text(RULES.read_text().replace("dayOfBirth ?dayOfBirth. }", "dayOfBirth ?monthOfBirth. }"))
    bad = runner.invoke(main, ["verify", "--proof", str(proof), "--rules", str(wrong), "--input", str(demo)])
    assert bad.exit_code == 8 and "rule-id mismatch" in bad.output

    doc = json.loads(proof.read_text())
    doc["steps"][0]["conclusions"][0][2] = '"1991"^^<http://www.w3.org/2001/XMLSchema#integer>'
    proof.write_text(json.dumps(doc))
    tampered = runner.invoke(main, ["verify", "--proof", str(proof), "--rules", str(RULES), "--input", str(demo)])
    assert tampered.exit_code == 8 and "step s1" in tampered.output


@pytest.mark.parametrize(
    "args, code",
    [
        (["run", "omop/person"], 5),
        (["run", "omop/nothing"], 4),
        (["run", "omop/person", "-p", "patient_uri"], 2),
        (["run", "orbis/demographics/demographics", "--proof-out", "/tmp/x.json"], 5),
        (["run", "demographics", "--config", "/nonexistent/service.ini"], 3),
        (["bench", "--sizes", "100", "--partitions", "5"], 2),
        (["frobnicate"], 2),
    ],
)
def test_exit_codes(runner, args, code):
    assert runner.invoke(main, args).exit_code == code


def test_serve_check(runner, tmp_path):
    ini = copy_golden(tmp_path / "golden")
    res = runner.invoke(main, ["serve", "--config", str(ini), "--check"])
    assert res.exit_code == 0 and "4 entities valid" in res.output
    (tmp_path / "golden" / "entities" / "omop" / "person" / "inputs.list").write_text("/entities/missing\n")
    bad = runner.invoke(main, ["serve", "--config", str(ini), "--check"])
    assert bad.exit_code == 3 and "omop/person" in bad.output


def test_three_patient_pipeline(runner, tmp_path):
    ini = copy_golden(tmp_path / "golden")
    src = tmp_path / "golden" / "source"
    with (src / "natperson.csv").open("a") as f:
        f.write("1002,Ada,Lovelace,1815-12-10 00:00:00\n1003,,Turing,1912-06-23 12:00:00\n")
    with (src / "patient.csv").open("a") as f:
        f.write("1002,1002\n1003,1003\n")
    res = runner.invoke(main, ["run", "demographics", "--config", str(ini)])
    assert res.exit_code == 0, res.output
    demo = parse_turtle(res.output)
    births = sorted(o.lexical for _, p, o in demo if p.value == "http://schema.org/birthDate")
    assert births == ["1815-12-10T00:00:00+01:00", "1912-06-23T12:00:00+01:00", "1990-02-08T00:00:00+01:00"]
    out = tmp_path / "cdm"
    for pid in ("1001", "1002", "1003"):
        uri = f"http://example.org/resource/Patient/{pid}"
        args = ["load", "omop/person", "--config", str(ini), "--target", str(GOLDEN / "targets" / "person.ini"), "-p", f"patient_uri={uri}", "--out-dir", str(out)]
        res = runner.invoke(main, args)
        assert res.exit_code == 0, res.output
        assert json.loads(res.output)["inserted"] == 1
    assert (out / "person.csv").read_text().splitlines() == [
        "person_id,year_of_birth,month_of_birth,day_of_birth",
        "1001,1990,2,8",
        "1002,1815,12,10",
        "1003,1912,6,23",
    ]


def test_load_golden_matches_table(runner, tmp_path):
    args = ["load", "omop/person", "--target", str(GOLDEN / "targets" / "person.ini"), "-p", f"patient_uri={PATIENT}", "--out-dir", str(tmp_path)]
    assert runner.invoke(main, args).exit_code == 0
    assert (tmp_path / "person.csv").read_bytes() == (EXPECTED / "person_table.csv").read_bytes()
    res = runner.invoke(main, args)
    assert json.loads(res.output)["skipped_duplicate"] == 1


def test_bench_tiny(runner, tmp_path):
    out = tmp_path / "bench.csv"
    res = runner.invoke(main, ["bench", "--sizes", "0,500", "--reps", "1", "--out", str(out)])
    assert res.exit_code == 0, res.output
    lines = out.read_text().splitlines()
    assert lines[0].startswith("size,records,input_triples")
    assert len(lines) == 3


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "sdv.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "serve" in res.stdout


def test_run_with_all_justifications(runner, tmp_path):
    proof = tmp_path / "proof.json"
    args = ["run", "demographics", "-p", f"patient_uri={PATIENT}", "--proof-out", str(proof), "--all-justifications"]
    assert runner.invoke(main, args).exit_code == 0
    assert json.loads(proof.read_text())["steps"]
