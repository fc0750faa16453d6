import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sdv.rdf import Graph, parse_term, parse_turtle
from sdv.rules import FIXPOINT, Proof, apply_rules, check_proof, parse_rules

from .mutations import mutate, sample_mutations, sites
from .oracles import render_rules
from .strategies import graphs, rules

SETTINGS = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])

RULES = """
@prefix ex: <http://ex.org/> .
@prefix func: <http://www.w3.org/2007/rif-builtin-function#> .
@prefix math: <http://www.w3.org/2000/10/swap/math#> .
{ ?p ex:born ?d . ?d func:year-from-dateTime ?y } => { ?p ex:year ?y } .
{ ?p ex:year ?y . ?y math:lessThan 2000 } => { ?p a ex:Senior } .
{ ?p a ex:Senior ; ex:name ?n } => { ?p ex:label ?n } .
"""

DATA = """
@prefix ex: <http://ex.org/> .
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
ex:a ex:born "1990-02-08T00:00:00+01:00"^^xsd:dateTime ; ex:name "Ann" .
ex:b ex:born "2004-05-01T10:00:00"^^xsd:dateTime ; ex:name "Bob" .
"""


@pytest.fixture
def case():
    rs = parse_rules(RULES, source="r.n3")
    g = parse_turtle(DATA)
    conv = apply_rules([g], rs, mode=FIXPOINT, want_proof=True, sources=["data"])
    return rs, g, conv


def test_proof_is_valid_and_round_trips(case):
    rs, g, conv = case
    assert check_proof(conv.proof, [g], rs)
    text = conv.proof.dumps()
    assert Proof.loads(text).to_json() == json.loads(text)
    assert check_proof(text, {"data": g}, rs)


def test_proof_covers_every_derived_triple(case):
    _, _, conv = case
    concluded = {tuple(c) for s in conv.proof.steps for c in s.conclusions}
    assert concluded == set(conv.graph)
    assert len(conv.proof.steps) == 4


def test_chained_premises_cite_earlier_steps(case):
    _, _, conv = case
    doc = conv.proof.to_json()
    ids = [s["id"] for s in doc["steps"]]
    for k, step in enumerate(doc["steps"]):
        for prem in step["premises"]:
            if "derived" in prem:
                assert prem["derived"] in ids[:k]


def test_every_single_mutation_is_rejected_at_its_step(case):
    rs, g, conv = case
    doc = conv.proof.to_json()
    for k, site in enumerate(sites(doc)):
        bad, step = mutate(doc, site, f"t{k}")
        verdict = check_proof(bad, [g], rs)
        assert not verdict, site
        assert verdict.step == step, (site, str(verdict))


def test_tampered_source_is_rejected(case):
    rs, g, conv = case
    h = Graph(g)
    h.add(tuple(parse_term(x) for x in ("<http://ex.org/c>", "<http://ex.org/name>", '"Cy"')))
    verdict = check_proof(conv.proof, [h], rs)
    assert not verdict and "hash" in verdict.reason


def test_wrong_rules_are_rejected(case):
    _, g, conv = case
    other = parse_rules(RULES.replace("2000", "1980"), source="r.n3")
    assert "rule-id mismatch" in check_proof(conv.proof, [g], other).reason
    renamed = parse_rules(RULES, source="s.n3")
    assert "rule-id mismatch" in check_proof(conv.proof, [g], renamed).reason


def test_conclusion_hash_is_checked(case):
    rs, g, conv = case
    doc = conv.proof.to_json()
    doc["conclusion_hash"] = "0" * 64
    assert "conclusion hash" in check_proof(doc, [g], rs).reason
    doc = conv.proof.to_json()
    doc["steps"].pop()
    assert not check_proof(doc, [g], rs)


def test_malformed_documents(case):
    rs, g, _ = case
    assert not check_proof("{}", [g], rs)
    assert not check_proof('{"version": 1, "sources": [], "rules": [], "steps": [{"id": "s1"}]}', [], rs)


@SETTINGS
@given(graphs(max_size=25), rules())
def test_random_proofs_check(triples, rule_data):
    rs = parse_rules(render_rules(rule_data))
    g = Graph(tuple(parse_term(x) for x in t) for t in triples)
    conv = apply_rules([g], rs, mode=FIXPOINT, want_proof=True)
    assert check_proof(conv.proof.dumps(), [g], rs)


@SETTINGS
@given(graphs(max_size=25), rules(), st.integers(0, 10**6))
def test_random_mutations_are_rejected(triples, rule_data, seed):
    rs = parse_rules(render_rules(rule_data))
    g = Graph(tuple(parse_term(x) for x in t) for t in triples)
    doc = apply_rules([g], rs, mode=FIXPOINT, want_proof=True).proof.to_json()
    if not doc["steps"]:
        return
    for bad, step in sample_mutations(doc, 3, seed):
        verdict = check_proof(bad, [g], rs)
        assert not verdict
        assert verdict.step == step


def test_all_justifications_records_every_firing():
    rs = parse_rules(
        "@prefix ex: <http://ex.org/> .\n{ ?a ex:p ?b } => { ?a a ex:T } .\n"
    )
    g = parse_turtle("<http://ex.org/a> <http://ex.org/p> 1, 2, 3 .")
    first = apply_rules([g], rs, want_proof=True).proof
    every = apply_rules([g], rs, want_proof=True, all_justifications=True).proof
    assert (len(first.steps), len(every.steps)) == (1, 3)
    assert first.conclusion_hash == every.conclusion_hash
    assert check_proof(every, [g], rs)
