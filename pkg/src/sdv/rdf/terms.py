"""RDF terms.

Terms are small immutable objects with a cached hash. Equality is lexical:
two literals are equal iff lexical form, datatype and language tag match.
"""

from __future__ import annotations

import re
from typing import Optional, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"

RDF_TYPE = RDF + "type"
RDF_LANGSTRING = RDF + "langString"
XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_BOOLEAN = XSD + "boolean"
XSD_DATETIME = XSD + "dateTime"
XSD_DATE = XSD + "date"

NUMERIC_TYPES = frozenset(
    {
        XSD_INTEGER,
        XSD_DECIMAL,
        XSD_DOUBLE,
        XSD + "float",
        XSD + "int",
        XSD + "long",
        XSD + "short",
        XSD + "nonNegativeInteger",
        XSD + "positiveInteger",
    }
)

_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


class TermError(ValueError):
    pass


class Iri:
    __slots__ = ("value", "_hash")

    def __init__(self, value: str):
        self.value = value
        self._hash = hash(("I", value))

    def __eq__(self, other):
        return other.__class__ is Iri and other.value == self.value

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Iri({self.value!r})"

    def n3(self) -> str:
        return f"<{self.value}>"

    @property
    def is_absolute(self) -> bool:
        return bool(_SCHEME.match(self.value))


class BlankNode:
    __slots__ = ("label", "_hash")

    def __init__(self, label: str):
        self.label = label
        self._hash = hash(("B", label))

    def __eq__(self, other):
        return other.__class__ is BlankNode and other.label == self.label

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"BlankNode({self.label!r})"

    def n3(self) -> str:
        return f"_:{self.label}"


class Literal:
    __slots__ = ("lexical", "datatype", "language", "_hash")

    def __init__(self, lexical: str, datatype: Optional[str] = None, language: Optional[str] = None):
        if language:
            language = language.lower()
            datatype = RDF_LANGSTRING
        elif datatype is None:
            datatype = XSD_STRING
        elif datatype == RDF_LANGSTRING:
            raise TermError("rdf:langString literal requires a language tag")
        self.lexical = lexical
        self.datatype = datatype
        self.language = language or None
        self._hash = hash(("L", lexical, datatype, self.language))

    def __eq__(self, other):
        return (
            other.__class__ is Literal
            and other.lexical == self.lexical
            and other.datatype == self.datatype
            and other.language == self.language
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if self.language:
            return f"Literal({self.lexical!r}, language={self.language!r})"
        return f"Literal({self.lexical!r}, {self.datatype!r})"

    @property
    def is_numeric(self) -> bool:
        return self.datatype in NUMERIC_TYPES

    def n3(self) -> str:
        text = '"' + escape_string(self.lexical) + '"'
        if self.language:
            return f"{text}@{self.language}"
        if self.datatype == XSD_STRING:
            return text
        return f"{text}^^<{self.datatype}>"


class Variable:
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("V", name))

    def __eq__(self, other):
        return other.__class__ is Variable and other.name == self.name

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Variable({self.name!r})"

    def n3(self) -> str:
        return f"?{self.name}"


Term = Union[Iri, BlankNode, Literal, Variable]

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def escape_string(s: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in s)


def integer(value: int) -> Literal:
    return Literal(str(value), XSD_INTEGER)


def numeric_value(lit: Literal):
    """Python number for a numeric literal, or None if the lexical form is invalid."""
    from decimal import Decimal, InvalidOperation

    try:
        if lit.datatype in (XSD_DOUBLE, XSD + "float"):
            return float(lit.lexical)
        if lit.datatype == XSD_DECIMAL:
            return Decimal(lit.lexical)
        return int(lit.lexical)
    except (ValueError, InvalidOperation):
        return None


_NT_TERM = re.compile(
    r'^(?:<(?P<iri>[^>]*)>'
    r'|_:(?P<bnode>\S+)'
    r'|\?(?P<var>\w+)'
    r'|"(?P<lex>(?:[^"\\]|\\.)*)"(?:@(?P<lang>[A-Za-z0-9\-]+)|\^\^<(?P<dt>[^>]*)>)?)$',
    re.S,
)
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t", "'": "'"}


def unescape_string(s: str) -> str:
    out = []
    i = 0
    while i < len(s):
        ch = s[i]
        if ch == "\\" and i + 1 < len(s):
            nxt = s[i + 1]
            if nxt in _UNESCAPES:
                out.append(_UNESCAPES[nxt])
                i += 2
                continue
            if nxt in "uU":
                width = 4 if nxt == "u" else 8
                out.append(chr(int(s[i + 2 : i + 2 + width], 16)))
                i += 2 + width
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def parse_term(text: str) -> Term:
    """Inverse of ``term.n3()`` for the N-Triples term forms."""
    m = _NT_TERM.match(text.strip())
    if not m:
        raise TermError(f"not an N-Triples term: {text!r}")
    if m.group("iri") is not None:
        return Iri(m.group("iri"))
    if m.group("bnode") is not None:
        return BlankNode(m.group("bnode"))
    if m.group("var") is not None:
        return Variable(m.group("var"))
    return Literal(unescape_string(m.group("lex")), m.group("dt"), m.group("lang"))


def sort_key(term: Term) -> str:
    """Canonical string used for deterministic ordering."""
    return term.n3()
