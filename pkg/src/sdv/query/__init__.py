"""Query templates and the SPARQL subset used by the RDF generator and the ETL projection."""

from sdv.query.evaluate import RowSet, eval_construct, eval_select, solve
from sdv.query.sparql import ConstructQuery, QueryError, SelectQuery, parse_query
from sdv.query.template import QueryTemplate, TemplateError, instantiate

__all__ = [
    "ConstructQuery",
    "QueryError",
    "QueryTemplate",
    "RowSet",
    "SelectQuery",
    "TemplateError",
    "eval_construct",
    "eval_select",
    "instantiate",
    "parse_query",
    "solve",
]
