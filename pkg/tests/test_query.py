from collections import Counter

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from sdv.query import ConstructQuery, QueryError, SelectQuery, eval_construct, eval_select, parse_query
from sdv.rdf import Graph, parse_term, parse_turtle

from .oracles import construct, group_vars, integer, ntriples_set, render_construct, render_select, select
from .strategies import IRIS, PREDS, graphs, groups

SETTINGS = settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def as_graph(triples) -> Graph:
    return Graph(tuple(parse_term(x) for x in t) for t in triples)


@st.composite
def construct_cases(draw):
    group = draw(groups())
    vars_ = sorted(group_vars(group))
    terms = vars_ + IRIS[:2]
    template = [
        (draw(st.sampled_from(terms)), draw(st.sampled_from(PREDS + [v for v in vars_ if v == "?p"])), draw(st.sampled_from(terms + ['"k"'])))
        for _ in range(draw(st.integers(1, 3)))
    ]
    return template, group


@st.composite
def select_cases(draw):
    group = draw(groups())
    vars_ = sorted(group_vars(group))
    assume(vars_)
    projection = draw(st.lists(st.sampled_from(vars_), min_size=1, max_size=3, unique=True))
    return projection, group, draw(st.booleans())


@SETTINGS
@given(graphs(max_size=30), construct_cases())
def test_construct_matches_oracle(triples, case):
    template, group = case
    q = parse_query(render_construct(template, group))
    assert isinstance(q, ConstructQuery)
    assert ntriples_set(eval_construct(q, as_graph(triples))) == construct(template, group, triples)


@SETTINGS
@given(graphs(max_size=30), select_cases())
def test_select_matches_oracle(triples, case):
    projection, group, distinct = case
    q = parse_query(render_select(projection, group, distinct))
    assert isinstance(q, SelectQuery)
    rows = [tuple(None if t is None else t.n3() for t in r) for r in eval_select(q, as_graph(triples))]
    want = select(projection, group, triples, distinct)
    if distinct:
        assert len(rows) == len(set(rows)) and set(rows) == want
    else:
        assert Counter(rows) == want


@SETTINGS
@given(graphs(max_size=30), select_cases())
def test_select_is_deterministic(triples, case):
    projection, group, distinct = case
    q = parse_query(render_select(projection, group, distinct))
    g = as_graph(triples)
    shuffled = as_graph(sorted(triples, reverse=True))
    assert eval_select(q, g).rows == eval_select(q, shuffled).rows


DATA = parse_turtle(
    """
    @prefix ex: <http://ex.org/> .
    ex:a ex:age 30 ; ex:name "Ann" .
    ex:b ex:age 4 ; ex:name "Bob" ; ex:nick "B" .
    ex:c ex:age 17 .
    """
)


def test_order_by_is_numeric():
    q = parse_query("PREFIX ex: <http://ex.org/> SELECT ?s ?a WHERE { ?s ex:age ?a } ORDER BY ?a")
    assert [r[1].n3() for r in eval_select(q, DATA)] == [integer(4), integer(17), integer(30)]


def test_optional_leaves_unbound():
    q = parse_query(
        "PREFIX ex: <http://ex.org/> SELECT ?s ?n ?k WHERE { ?s ex:age ?a OPTIONAL { ?s ex:name ?n } OPTIONAL { ?s ex:nick ?k } } ORDER BY ?s"
    )
    rows = [[None if t is None else t.n3() for t in r] for r in eval_select(q, DATA)]
    assert rows == [
        ["<http://ex.org/a>", '"Ann"', None],
        ["<http://ex.org/b>", '"Bob"', '"B"'],
        ["<http://ex.org/c>", None, None],
    ]


def test_filter_on_numbers_and_strings():
    q = parse_query('PREFIX ex: <http://ex.org/> SELECT ?s WHERE { ?s ex:age ?a ; ex:name ?n FILTER (?a > 10 && ?n != "Bob") }')
    assert [r[0].n3() for r in eval_select(q, DATA)] == ["<http://ex.org/a>"]


def test_construct_skips_unbound_template_triples():
    q = parse_query("PREFIX ex: <http://ex.org/> CONSTRUCT { ?s ex:label ?n } WHERE { ?s ex:age ?a OPTIONAL { ?s ex:name ?n } }")
    assert len(eval_construct(q, DATA)) == 2


@pytest.mark.parametrize(
    "text",
    [
        "SELECT ?x WHERE { ?s <http://p> ?o }",
        "CONSTRUCT { ?x <http://p> ?o } WHERE { ?s <http://p> ?o }",
        "SELECT ?s WHERE { ?s <http://p> ?o ",
        "SELECT ?s WHERE { ?s ex:p ?o }",
        "DESCRIBE <http://a>",
    ],
)
def test_query_errors(text):
    with pytest.raises((QueryError, ValueError)):
        parse_query(text)
