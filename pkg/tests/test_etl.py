import csv
import json
import random
import threading

import pytest

from sdv.etl import EtlError, TargetColumn, TargetTableSpec, load, load_target_spec, project, project_and_load
from sdv.query import parse_query
from sdv.rdf import Graph, Iri, Literal, XSD

from .conftest import GOLDEN

OMOP = "http://www.salusproject.eu/ontology/omop#"
SPEC = GOLDEN / "targets" / "person.ini"


def person_graph(people):
    """people: {id: (year, month or None, day or None)}; lexical values are used as given."""
    g = Graph()
    for pid, (year, month, day) in people.items():
        s = Iri(f"http://example.org/resource/Person/{pid}")
        for name, v in (("yearOfBirth", year), ("monthOfBirth", month), ("dayOfBirth", day)):
            if v is not None:
                g.add((s, Iri(OMOP + name), Literal(str(v), XSD + "integer")))
    return g


def read_table(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def test_golden_row(golden_service, tmp_path, expected):
    g = golden_service.produce("omop/person", {"patient_uri": "http://example.org/resource/Patient/1001"}).graph
    rows, report = project_and_load(g, load_target_spec(SPEC), tmp_path)
    assert list(rows) == [("1001", "1990", "2", "8")]
    assert (report.inserted, report.skipped_duplicate, report.rejected) == (1, 0, 0)
    assert (tmp_path / "person.csv").read_bytes() == expected["person_csv"]


def test_duplicate_key_is_skipped(tmp_path):
    spec = load_target_spec(SPEC)
    g = person_graph({7: (1980, 1, 2)})
    project_and_load(g, spec, tmp_path)
    _, second = project_and_load(person_graph({7: (1981, 1, 2)}), spec, tmp_path)
    assert (second.inserted, second.skipped_duplicate) == (0, 1)
    assert read_table(tmp_path / "person.csv")[1] == ["7", "1980", "1", "2"]
    log = (tmp_path / "person.load.log").read_text().splitlines()
    assert log[-1].endswith("inserted=0 skipped_duplicate=1 rejected=0 replaced=0")
    assert json.loads((tmp_path / "person.load.json").read_text())["skipped_duplicate"] == 1


def test_replace_policy(tmp_path):
    spec = load_target_spec(SPEC)
    project_and_load(person_graph({7: (1980, 1, 2), 8: (1990, None, None)}), spec, tmp_path)
    _, report = project_and_load(person_graph({7: (1981, 3, 4)}), spec, tmp_path, policy="replace")
    assert (report.inserted, report.replaced) == (1, 1)
    assert read_table(tmp_path / "person.csv")[1:] == [["7", "1981", "3", "4"], ["8", "1990", "", ""]]
    with pytest.raises(ValueError):
        load([], spec, tmp_path, policy="merge")


def test_thousand_persons_against_counting_oracle(tmp_path):
    rng = random.Random(3)
    people = {}
    for pid in rng.sample(range(1, 10**6), 1000):
        people[pid] = (rng.randint(1900, 2020), rng.choice([None, rng.randint(1, 12)]), rng.choice([None, rng.randint(1, 28)]))
    rows, report = project_and_load(person_graph(people), load_target_spec(SPEC), tmp_path)
    assert report.inserted == 1000 and report.rejected == 0
    stored = {r[0]: r[1:] for r in read_table(tmp_path / "person.csv")[1:]}
    want = {str(pid): ["" if v is None else str(v) for v in vals] for pid, vals in people.items()}
    assert stored == want


def test_injected_type_errors_are_rejected(tmp_path):
    rng = random.Random(5)
    people = {pid: (rng.randint(1900, 2020), rng.randint(1, 12), rng.randint(1, 28)) for pid in range(1, 1001)}
    bad = set(rng.sample(sorted(people), 10))
    for pid in bad:
        people[pid] = ("unknown", people[pid][1], people[pid][2])
    rows, report = project_and_load(person_graph(people), load_target_spec(SPEC), tmp_path)
    assert (report.inserted, report.rejected) == (990, 10)
    rejected_ids = {rows[r.row][0] for r in report.rejections}
    assert rejected_ids == {str(p) for p in bad}
    assert all("year_of_birth" in r.reason for r in report.rejections)


def test_load_is_deterministic(tmp_path):
    rng = random.Random(9)
    people = {pid: (rng.randint(1900, 2020), rng.randint(1, 12), None) for pid in range(1, 200)}
    spec = load_target_spec(SPEC)
    project_and_load(person_graph(people), spec, tmp_path / "a")
    shuffled = Graph(sorted(person_graph(people), key=lambda t: rng.random()))
    project_and_load(shuffled, spec, tmp_path / "b")
    assert (tmp_path / "a" / "person.csv").read_bytes() == (tmp_path / "b" / "person.csv").read_bytes()


def test_concurrent_loads_do_not_lose_rows(tmp_path):
    spec = load_target_spec(SPEC)
    batches = [person_graph({pid: (2000, 1, 1) for pid in range(k * 50, k * 50 + 50)}) for k in range(8)]
    threads = [threading.Thread(target=project_and_load, args=(g, spec, tmp_path)) for g in batches]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(read_table(tmp_path / "person.csv")) == 1 + 400


def test_canonical_forms():
    q = parse_query("SELECT ?k ?d ?t WHERE { ?k <http://p> ?d ; <http://q> ?t }")
    spec = TargetTableSpec("T", [TargetColumn("k", "string"), TargetColumn("d", "decimal"), TargetColumn("t", "date")], "k", q, "iri")
    g = Graph(
        [
            (Iri("http://x/1"), Iri("http://p"), Literal("1.50", XSD + "decimal")),
            (Iri("http://x/1"), Iri("http://q"), Literal("2020-01-02T10:00:00Z", XSD + "dateTime")),
        ]
    )
    assert list(project(g, spec)) == [("http://x/1", "1.5", "2020-01-02")]


def test_spec_errors(tmp_path):
    q = parse_query("SELECT ?a WHERE { ?a <http://p> ?b }")
    with pytest.raises(EtlError, match="key column"):
        TargetTableSpec("T", [TargetColumn("a", "string")], "b", q)
    with pytest.raises(EtlError, match="projects"):
        TargetTableSpec("T", [TargetColumn("a", "string"), TargetColumn("b", "string")], "a", q)
    (tmp_path / "t.rq").write_text("CONSTRUCT { ?a <http://p> ?b } WHERE { ?a <http://p> ?b }")
    (tmp_path / "t.ini").write_text("[table]\nname = T\nkey = a\ncolumns = a\nquery = t.rq\n")
    with pytest.raises(EtlError, match="SELECT"):
        load_target_spec(tmp_path / "t.ini")
    (tmp_path / "t.ini").write_text("[table]\nname = T\nkey = a\ncolumns = a:float\nquery = t.rq\n")
    with pytest.raises(EtlError, match="unknown column type"):
        load_target_spec(tmp_path / "t.ini")


def test_header_mismatch(tmp_path):
    (tmp_path / "person.csv").write_text("id,year\r\n")
    with pytest.raises(EtlError, match="header"):
        load([("1", "2000", "", "")], load_target_spec(SPEC), tmp_path)
