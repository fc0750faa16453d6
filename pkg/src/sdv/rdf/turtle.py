"""Turtle subset reader and deterministic writer.

Supported: @prefix/PREFIX, @base/BASE, IRIs, prefixed names, ``_:`` and
``[]`` blank nodes (including property lists), plain/typed/language
literals, numeric and boolean shorthand, ``a``, ``;`` and ``,``.
Collections are rejected.
"""

from __future__ import annotations

import itertools
import re
from typing import Dict, List, Optional

from sdv.rdf.canon import canonical_relabel
from sdv.rdf.graph import Graph
from sdv.rdf.lexer import SyntaxErrorAt, TokenParser
from sdv.rdf.terms import (
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_INTEGER,
    XSD,
    XSD_STRING,
    BlankNode,
    Iri,
    Literal,
    Term,
    escape_string,
)

TurtleSyntaxError = SyntaxErrorAt

_fresh = itertools.count()


def fresh_bnode() -> BlankNode:
    return BlankNode(f"n{next(_fresh)}")


class TurtleParser(TokenParser):
    def __init__(self, text: str, base: Optional[str] = None):
        super().__init__(text, base)
        self.graph = Graph(base=base)
        self._labels: Dict[str, BlankNode] = {}

    def parse(self) -> Graph:
        while self.tok.kind != "EOF":
            if self.try_directive():
                continue
            self.triples()
            self.expect_op(".")
        self.graph.prefixes = dict(self.prefixes)
        self.graph.base = self.base
        return self.graph

    def triples(self):
        if self.at_op("["):
            subj = self.bnode_property_list()
            if self.at_op("."):
                return
        else:
            subj = self.subject()
        self.predicate_object_list(subj)

    def subject(self) -> Term:
        t = self.tok
        if t.kind == "BNODE":
            return self.bnode_label()
        if self.at_op("("):
            self.error("collections are not supported")
        if self.at_iri():
            return self.iri()
        self.error(f"expected a subject, found {t.value or t.kind!r}")

    def bnode_label(self) -> BlankNode:
        label = self.next().value[2:]
        node = self._labels.get(label)
        if node is None:
            node = self._labels[label] = fresh_bnode()
        return node

    def bnode_property_list(self) -> BlankNode:
        self.expect_op("[")
        node = fresh_bnode()
        if not self.at_op("]"):
            self.predicate_object_list(node)
        self.expect_op("]")
        return node

    def predicate_object_list(self, subj: Term):
        while True:
            pred = self.verb()
            while True:
                self.graph.add((subj, pred, self.object()))
                if not self.at_op(","):
                    break
                self.next()
            if not self.at_op(";"):
                return
            while self.at_op(";"):
                self.next()
            if self.at_op(".", "]") or self.tok.kind == "EOF":
                return

    def verb(self) -> Iri:
        if self.tok.kind == "WORD" and self.tok.value == "a":
            self.next()
            return Iri(RDF_TYPE)
        return self.iri()

    def object(self) -> Term:
        t = self.tok
        if t.kind == "BNODE":
            return self.bnode_label()
        if self.at_op("["):
            return self.bnode_property_list()
        if self.at_op("("):
            self.error("collections are not supported")
        if self.at_literal():
            return self.literal()
        if self.at_iri():
            return self.iri()
        if t.kind == "VAR":
            self.error("variables are not allowed in data")
        self.error(f"expected an object, found {t.value or t.kind!r}")


def parse_turtle(text: str, base: Optional[str] = None) -> Graph:
    """Parse a Turtle document into a Graph; blank nodes are fresh per call."""
    return TurtleParser(text, base).parse()


# -- writer -----------------------------------------------------------------

_LOCAL = re.compile(r"^[A-Za-z_][\w\-]*$")
_INT = re.compile(r"^[+-]?\d+$")
_DEC = re.compile(r"^[+-]?\d*\.\d+$")


def _qname(iri: str, prefixes: Dict[str, str], used: set) -> Optional[str]:
    best = None
    for pfx, ns in prefixes.items():
        if iri.startswith(ns) and _LOCAL.match(iri[len(ns):]):
            if best is None or len(ns) > len(prefixes[best]) or (len(ns) == len(prefixes[best]) and pfx < best):
                best = pfx
    if best is None:
        return None
    used.add(best)
    return f"{best}:{iri[len(prefixes[best]):]}"


def _render(term: Term, prefixes: Dict[str, str], used: set) -> str:
    if term.__class__ is Iri:
        return _qname(term.value, prefixes, used) or term.n3()
    if term.__class__ is Literal:
        dt = term.datatype
        if term.language:
            return term.n3()
        if dt == XSD_INTEGER and _INT.match(term.lexical):
            return term.lexical
        if dt == XSD_DECIMAL and _DEC.match(term.lexical):
            return term.lexical
        if dt == XSD_BOOLEAN and term.lexical in ("true", "false"):
            return term.lexical
        text = '"' + escape_string(term.lexical) + '"'
        if dt == XSD_STRING:
            return text
        return text + "^^" + (_qname(dt, prefixes, used) or f"<{dt}>")
    return term.n3()


def serialize_turtle(g: Graph) -> str:
    """Deterministic Turtle: sorted prefixes, triples sorted by canonical strings."""
    relabel = canonical_relabel(g)

    def canon(t: Term) -> Term:
        return relabel.get(t, t) if t.__class__ is BlankNode else t

    triples = sorted(
        ((canon(s), p, canon(o)) for s, p, o in g),
        key=lambda t: (t[0].n3(), t[1].n3(), t[2].n3()),
    )
    prefixes = dict(g.prefixes)
    if "xsd" not in prefixes and XSD not in prefixes.values():
        prefixes["xsd"] = XSD
    used: set = set()
    body: List[str] = []
    current = None
    for s, p, o in triples:
        pred = "a" if p.value == RDF_TYPE else _render(p, prefixes, used)
        obj = _render(o, prefixes, used)
        if s != current:
            if current is not None:
                body[-1] += " .\n"
            body.append(f"{_render(s, prefixes, used)} {pred} {obj}")
            current = s
        else:
            body[-1] += f" ;\n    {pred} {obj}"
    if body:
        body[-1] += " .\n"
    head = "".join(f"@prefix {pfx}: <{prefixes[pfx]}> .\n" for pfx in sorted(used))
    if head and body:
        head += "\n"
    return head + "".join(body)
