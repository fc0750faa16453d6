"""RDF data model shared by every layer."""

from sdv.rdf.canon import canonical_ntriples, graph_hash, isomorphic
from sdv.rdf.graph import Binding, Graph, Triple, TriplePattern, match, substitute
from sdv.rdf.lexer import SyntaxErrorAt
from sdv.rdf.terms import (
    RDF,
    RDF_TYPE,
    RDFS,
    XSD,
    BlankNode,
    Iri,
    Literal,
    Term,
    TermError,
    Variable,
    parse_term,
)
from sdv.rdf.turtle import parse_turtle, serialize_turtle

__all__ = [
    "RDF",
    "RDFS",
    "RDF_TYPE",
    "XSD",
    "Binding",
    "BlankNode",
    "Graph",
    "Iri",
    "Literal",
    "SyntaxErrorAt",
    "Term",
    "TermError",
    "Triple",
    "TriplePattern",
    "Variable",
    "canonical_ntriples",
    "graph_hash",
    "isomorphic",
    "match",
    "parse_term",
    "parse_turtle",
    "serialize_turtle",
    "substitute",
]
