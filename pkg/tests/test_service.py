import dataclasses

import httpx
import pytest
from fastapi.testclient import TestClient

from sdv.rdf import Graph, isomorphic, parse_turtle
from sdv.rules import check_proof
from sdv.service import EntityService, load_service_config
from sdv.service.app import create_app, split_multipart
from sdv.service.config import ConfigError, InputSpec
from sdv.service.producer import PROVENANCE_HEADER
from sdv.synth import generate

from .conftest import PATIENT, copy_golden, free_port, inprocess_service

Q = {"patient_uri": PATIENT}


def turtle(resp) -> Graph:
    assert resp.status_code == 200, resp.text
    assert resp.headers["content-type"].startswith("text/turtle")
    return parse_turtle(resp.text)


# -- golden entities ------------------------------------------------------------


@pytest.mark.parametrize(
    "path, key",
    [("orbis/demographics/demographics", "source"), ("demographics", "domain"), ("omop/person", "application")],
)
def test_golden_entities(client, expected, path, key):
    assert isomorphic(turtle(client.get(f"/entities/{path}", params=Q)), expected[key])


def test_etag_and_conditional_get(client):
    a = client.get("/entities/omop/person", params=Q)
    b = client.get("/entities/omop/person", params=Q)
    assert a.headers["etag"] == b.headers["etag"]
    assert a.content == b.content
    c = client.get("/entities/omop/person", params=Q, headers={"If-None-Match": a.headers["etag"]})
    assert c.status_code == 304 and c.content == b""
    other = client.get("/entities/demographics", params=Q)
    assert other.headers["etag"] != a.headers["etag"]


def test_provenance_header_lists_inputs_in_pre_order(client):
    resp = client.get("/entities/omop/person", params=Q)
    urls = resp.headers[PROVENANCE_HEADER].split()
    assert [u.split("?")[0] for u in urls] == [
        "http://testserver/entities/demographics",
        "http://testserver/entities/orbis/demographics/demographics",
        "http://testserver/entities/orbis/demographics/address",
    ]
    assert all(u.endswith("patient_uri=http%3A%2F%2Fexample.org%2Fresource%2FPatient%2F1001") for u in urls)


@pytest.mark.parametrize("path", ["demographics", "omop/person"])
def test_proof_response(client, golden_service, path):
    resp = client.get(f"/entities/{path}", params={**Q, "proof": "true"})
    assert resp.headers["content-type"].startswith("multipart/mixed")
    (t1, body), (t2, proof) = split_multipart(resp.headers["content-type"], resp.content)
    assert (t1, t2) == ("text/turtle", "application/json")
    assert isomorphic(parse_turtle(body.decode()), turtle(client.get(f"/entities/{path}", params=Q)))
    graphs, sources = golden_service.inputs(path, Q)
    assert check_proof(proof.decode(), dict(zip(sources, graphs)), golden_service.resolve(path).rules)


def test_source_entity_ignores_proof_flag(client):
    resp = client.get("/entities/orbis/demographics/demographics", params={**Q, "proof": "true"})
    assert resp.headers["content-type"].startswith("text/turtle")


def test_unknown_patient_gives_empty_graph(client):
    g = turtle(client.get("/entities/omop/person", params={"patient_uri": "http://example.org/resource/Patient/9"}))
    assert len(g) == 0


def test_optional_parameter_may_be_omitted(client, expected):
    g = turtle(client.get("/entities/demographics"))
    assert isomorphic(g, expected["domain"])


# -- errors ------------------------------------------------------------------------


def test_missing_required_parameter(client):
    resp = client.get("/entities/omop/person")
    assert resp.status_code == 400
    assert "patient_uri" in resp.json()["error"]
    assert client.get("/entities/omop/person", params={"patient_uri": ""}).status_code == 400


def test_undeclared_parameter(client):
    resp = client.get("/entities/omop/person", params={**Q, "colour": "red"})
    assert resp.status_code == 400 and "colour" in resp.json()["error"]


def test_unknown_entity(client):
    resp = client.get("/entities/omop/visit")
    assert resp.status_code == 404
    assert resp.json() == {"status": 404, "error": "unknown entity 'omop/visit'", "entity": "omop/visit"}
    assert client.get("/entities/omop/visit/meta").status_code == 404


def test_injection_is_a_bad_request(client):
    resp = client.get("/entities/orbis/demographics/demographics", params={"patient_uri": "x> . } #"})
    assert resp.status_code == 400


def test_listing_and_meta(client):
    listing = client.get("/entities").json()
    paths = [e["path"] for e in listing["entities"]]
    assert paths == ["demographics", "omop/person", "orbis/demographics/address", "orbis/demographics/demographics"]
    assert listing["disabled"] == {}
    meta = client.get("/entities/omop/person/meta").json()
    assert meta["kind"] == "converted" and meta["required"] == ["patient_uri"]
    assert meta["inputs"] == ["/entities/demographics?patient_uri={patient_uri}"]


# -- configuration faults ------------------------------------------------------------


@pytest.fixture
def golden_copy(tmp_path):
    return copy_golden(tmp_path / "golden")


def test_disabled_entity(golden_copy):
    rules = golden_copy.parent / "entities" / "demographics" / "rules.n3"
    rules.write_text(rules.read_text() + "\n{ ?a ?b ?c } => { ?a ?b ?z } .\n")
    svc = inprocess_service(golden_copy)
    assert "demographics" in svc.errors and "range-restricted" in svc.errors["demographics"]
    client = TestClient(create_app(svc))
    assert client.get("/entities").json()["disabled"].keys() == {"demographics"}
    assert client.get("/entities/demographics").status_code == 500
    # a dependent entity cannot fetch its input
    assert client.get("/entities/omop/person", params=Q).status_code == 502


def test_dangling_input_disables_entity(golden_copy):
    inputs = golden_copy.parent / "entities" / "omop" / "person" / "inputs.list"
    inputs.write_text("/entities/nowhere?patient_uri={patient_uri}\n")
    svc = inprocess_service(golden_copy)
    assert "nowhere" in svc.errors["omop/person"]


def test_rule_error_names_the_rule(golden_copy):
    rules = golden_copy.parent / "entities" / "omop" / "person" / "rules.n3"
    rules.write_text(
        "PREFIX math: <http://www.w3.org/2000/10/swap/math#>\n"
        "{ ?p <http://schema.org/birthDate> ?d . ?x math:greaterThan 1 } => { ?p <http://ex.org/q> ?d } .\n"
    )
    client = TestClient(create_app(inprocess_service(golden_copy)))
    resp = client.get("/entities/omop/person", params=Q)
    assert resp.status_code == 500
    assert resp.json()["rule"] == "rules.n3#1"


def test_unreachable_input_is_502(golden_copy):
    svc = inprocess_service(golden_copy)
    svc.config = dataclasses.replace(svc.config, fetch="http", base_url=f"http://127.0.0.1:{free_port()}", fetch_timeout=2)
    resp = TestClient(create_app(svc)).get("/entities/omop/person", params=Q)
    assert resp.status_code == 502
    assert "url" in resp.json()


def test_zero_entities(tmp_path):
    (tmp_path / "entities").mkdir()
    (tmp_path / "service.ini").write_text("[service]\nentities = entities\n")
    svc = EntityService(load_service_config(tmp_path / "service.ini"))
    assert TestClient(create_app(svc)).get("/entities").json() == {"entities": [], "disabled": {}}


def test_entities_root_override(tmp_path, golden_copy, monkeypatch):
    (tmp_path / "empty").mkdir()
    monkeypatch.setenv("SDV_ENTITIES_ROOT", str(tmp_path / "empty"))
    assert load_service_config(golden_copy).entities_root == tmp_path / "empty"


def test_bad_service_config(tmp_path):
    (tmp_path / "service.ini").write_text("[service]\nentities = e\nfetch = carrier-pigeon\n")
    with pytest.raises(ConfigError):
        load_service_config(tmp_path / "service.ini")


def test_input_expansion():
    spec = InputSpec("/entities/a?x={x}&y={y}&z=1")
    assert spec.expand({"x": "a b/c"}) == "/entities/a?x=a%20b%2Fc&z=1"
    assert spec.entity_path() == "a"
    assert spec.holes() == ["x", "y"]


# -- partitions -------------------------------------------------------------------


@pytest.fixture(scope="module")
def synthetic(tmp_path_factory):
    ds = generate(tmp_path_factory.mktemp("synthetic"), 1500, seed=11)
    return ds, EntityService(load_service_config(ds.service_ini))


def test_partition_union_equals_whole(synthetic):
    ds, svc = synthetic
    whole = svc.produce("diagnosis", {}).graph
    assert len(whole) > 0
    assert isomorphic(svc.produce_partitioned("diagnosis", {}, ds.periods), whole)


def test_single_partition_equals_direct_request(synthetic):
    ds, svc = synthetic
    one = svc.produce_partitioned("diagnosis", {}, [ds.periods[4]])
    assert one == svc.produce("diagnosis", {"period": ds.periods[4]}).graph


def test_partition_requires_declared_key(golden_service):
    with pytest.raises(Exception, match="partition"):
        golden_service.produce_partitioned("omop/person", Q, ["a"])


def test_http_fetch_through_live_server(live_server, expected):
    resp = httpx.get(f"{live_server}/entities/omop/person", params=Q, timeout=10)
    assert isomorphic(turtle(resp), expected["application"])
    assert resp.headers[PROVENANCE_HEADER].startswith(f"{live_server}/entities/demographics")
