"""Tokenizer and term-level parser shared by the Turtle, N3 and SPARQL readers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional
from urllib.parse import urljoin

from sdv.rdf.terms import (
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
    Iri,
    Literal,
    Term,
    unescape_string,
)


class SyntaxErrorAt(ValueError):
    """Syntax error carrying a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


@dataclass
class Token:
    kind: str
    value: str
    line: int
    col: int
    extra: Optional[str] = None  # prefix part of a PNAME


_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("IRI", r"<[^<>\"{}|^`\\\x00-\x20]*>"),
    ("STRING", r'"""(?:[^"\\]|\\.|"(?!""))*"""|\'\'\'(?:[^\'\\]|\\.|\'(?!\'\'))*\'\'\'|"(?:[^"\\\n]|\\.)*"|\'(?:[^\'\\\n]|\\.)*\''),
    ("BNODE", r"_:[A-Za-z0-9_](?:[\w.\-]*[\w\-])?"),
    ("VAR", r"[?$][A-Za-z0-9_]+"),
    ("DOUBLE", r"[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.\d+[eE][+-]?\d+|\d+[eE][+-]?\d+)"),
    ("DECIMAL", r"[+-]?\d*\.\d+"),
    ("INTEGER", r"[+-]?\d+"),
    ("AT", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("PNAME", r"(?:[A-Za-z](?:[\w.\-]*[\w\-])?)?:(?:[\w\-%:](?:[\w.\-%:]*[\w\-%:])?)?"),
    ("WORD", r"[A-Za-z_][\w\-]*"),
    ("OP", r"=>|<=|>=|!=|&&|\|\||\^\^|[.;,\[\](){}=<>!*]"),
]
_MASTER = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKEN_SPEC))


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _MASTER.match(text, pos)
        if not m:
            raise SyntaxErrorAt(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind not in ("WS", "COMMENT"):
            tok = Token(kind, value, line, col)
            if kind == "PNAME":
                pfx, _, local = value.partition(":")
                tok.extra = pfx
                tok.value = local
            tokens.append(tok)
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class TokenParser:
    """Cursor over a token list with prefix/base aware term parsing."""

    variables_allowed = False

    def __init__(self, text: str, base: Optional[str] = None):
        self.tokens = tokenize(text)
        self.i = 0
        self.base = base
        self.prefixes: Dict[str, str] = {}

    # -- cursor ------------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise SyntaxErrorAt(message, tok.line, tok.col)

    def at_op(self, *values: str) -> bool:
        return self.tok.kind == "OP" and self.tok.value in values

    def at_word(self, *values: str) -> bool:
        return self.tok.kind == "WORD" and self.tok.value.upper() in values

    def expect_op(self, value: str) -> Token:
        if not self.at_op(value):
            self.error(f"expected {value!r}, found {self.tok.value or self.tok.kind!r}")
        return self.next()

    # -- directives --------------------------------------------------------

    def try_directive(self) -> bool:
        """Consume a @prefix/@base/PREFIX/BASE directive if one is next."""
        t = self.tok
        if t.kind == "AT" and t.value in ("@prefix", "@base"):
            self.next()
            if t.value == "@prefix":
                self._prefix_body()
            else:
                self._base_body()
            self.expect_op(".")
            return True
        if t.kind == "WORD" and t.value.upper() in ("PREFIX", "BASE"):
            self.next()
            if t.value.upper() == "PREFIX":
                self._prefix_body()
            else:
                self._base_body()
            return True
        return False

    def _prefix_body(self):
        t = self.next()
        if t.kind != "PNAME" or t.value:
            self.error("expected a prefix name ending in ':'", t)
        iri_tok = self.next()
        if iri_tok.kind != "IRI":
            self.error("expected an IRI after prefix name", iri_tok)
        self.prefixes[t.extra] = self._resolve(iri_tok.value[1:-1], iri_tok)

    def _base_body(self):
        iri_tok = self.next()
        if iri_tok.kind != "IRI":
            self.error("expected an IRI after base", iri_tok)
        self.base = self._resolve(iri_tok.value[1:-1], iri_tok)

    # -- terms -------------------------------------------------------------

    def _resolve(self, iri: str, tok: Token) -> str:
        iri = unescape_string(iri)
        if re.match(r"^[A-Za-z][A-Za-z0-9+.\-]*:", iri):
            return iri
        if self.base is None:
            self.error(f"relative IRI <{iri}> with no base", tok)
        return urljoin(self.base, iri)

    def iri(self) -> Iri:
        t = self.next()
        if t.kind == "IRI":
            return Iri(self._resolve(t.value[1:-1], t))
        if t.kind == "PNAME":
            if t.extra not in self.prefixes:
                self.error(f"undefined prefix {t.extra + ':'!r}", t)
            return Iri(self.prefixes[t.extra] + t.value.replace("\\", ""))
        self.error(f"expected an IRI, found {t.value or t.kind!r}", t)

    def literal(self) -> Literal:
        t = self.next()
        if t.kind == "STRING":
            raw = t.value
            body = raw[3:-3] if raw[:3] in ('"""', "'''") else raw[1:-1]
            lexical = unescape_string(body)
            if self.tok.kind == "AT":
                lang = self.next().value[1:]
                return Literal(lexical, language=lang)
            if self.at_op("^^"):
                self.next()
                return Literal(lexical, self.iri().value)
            return Literal(lexical)
        if t.kind == "INTEGER":
            return Literal(t.value, XSD_INTEGER)
        if t.kind == "DECIMAL":
            return Literal(t.value, XSD_DECIMAL)
        if t.kind == "DOUBLE":
            return Literal(t.value, XSD_DOUBLE)
        if t.kind == "WORD" and t.value in ("true", "false"):
            return Literal(t.value, XSD_BOOLEAN)
        self.error(f"expected a literal, found {t.value or t.kind!r}", t)

    def at_literal(self) -> bool:
        t = self.tok
        return t.kind in ("STRING", "INTEGER", "DECIMAL", "DOUBLE") or (
            t.kind == "WORD" and t.value in ("true", "false")
        )

    def at_iri(self) -> bool:
        return self.tok.kind in ("IRI", "PNAME")

    def variable(self) -> Term:
        from sdv.rdf.terms import Variable

        t = self.next()
        if not self.variables_allowed:
            self.error("variables are not allowed here", t)
        return Variable(t.value[1:])
