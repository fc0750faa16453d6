"""Parser for the supported SPARQL subset.

CONSTRUCT and SELECT [DISTINCT] over groups of triple patterns, OPTIONAL
and FILTER; FILTER supports = != < <= > >= && || ! and parentheses;
SELECT may carry ORDER BY over plain variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Union

from sdv.rdf.graph import TriplePattern
from sdv.rdf.lexer import SyntaxErrorAt, TokenParser
from sdv.rdf.terms import RDF_TYPE, Iri, Literal, Term, Variable

QuerySyntaxError = SyntaxErrorAt

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class TermExpr:
    term: Term


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[TermExpr, Compare, And, Or, Not]


@dataclass
class Filter:
    expr: Expr


@dataclass
class Optional_:
    group: "Group"


@dataclass
class Group:
    elements: List[Union[TriplePattern, Optional_, Filter]] = field(default_factory=list)

    @property
    def patterns(self) -> List[TriplePattern]:
        return [e for e in self.elements if isinstance(e, tuple)]

    def variables(self) -> set:
        names = set()
        for e in self.elements:
            if isinstance(e, tuple):
                names |= {t.name for t in e if isinstance(t, Variable)}
            elif isinstance(e, Optional_):
                names |= e.group.variables()
        return names


@dataclass
class ConstructQuery:
    template: List[TriplePattern]
    where: Group
    prefixes: dict = field(default_factory=dict)


@dataclass
class SelectQuery:
    projection: List[str]
    where: Group
    distinct: bool = False
    order_by: List[str] = field(default_factory=list)
    prefixes: dict = field(default_factory=dict)


Query = Union[ConstructQuery, SelectQuery]


class QueryError(ValueError):
    pass


class SparqlParser(TokenParser):
    variables_allowed = True

    def parse(self) -> Query:
        while self.try_directive():
            pass
        if self.at_word("CONSTRUCT"):
            q = self.construct()
        elif self.at_word("SELECT"):
            q = self.select()
        else:
            self.error("expected CONSTRUCT or SELECT")
        if self.tok.kind != "EOF":
            self.error(f"unexpected trailing {self.tok.value!r}")
        q.prefixes = dict(self.prefixes)
        validate(q)
        return q

    def construct(self) -> ConstructQuery:
        self.next()
        self.expect_op("{")
        template = []
        while not self.at_op("}"):
            self.triples_block(template)
            if self.at_op("."):
                self.next()
        self.next()
        if self.at_word("WHERE"):
            self.next()
        return ConstructQuery(template, self.group())

    def select(self) -> SelectQuery:
        self.next()
        distinct = False
        if self.at_word("DISTINCT"):
            self.next()
            distinct = True
        projection: List[str] = []
        star = False
        if self.at_op("*"):
            self.next()
            star = True
        else:
            while self.tok.kind == "VAR":
                projection.append(self.next().value[1:])
            if not projection:
                self.error("SELECT needs at least one variable or *")
        if self.at_word("WHERE"):
            self.next()
        where = self.group()
        order: List[str] = []
        if self.at_word("ORDER"):
            self.next()
            if not self.at_word("BY"):
                self.error("expected BY after ORDER")
            self.next()
            while self.tok.kind == "VAR":
                order.append(self.next().value[1:])
            if not order:
                self.error("ORDER BY needs at least one variable")
        if star:
            projection = sorted(where.variables())
        return SelectQuery(projection, where, distinct, order)

    def group(self) -> Group:
        self.expect_op("{")
        g = Group()
        while not self.at_op("}"):
            if self.tok.kind == "EOF":
                self.error("unterminated group")
            if self.at_word("OPTIONAL"):
                self.next()
                g.elements.append(Optional_(self.group()))
            elif self.at_word("FILTER"):
                self.next()
                if self.at_op("("):
                    self.next()
                    expr = self.or_expr()
                    self.expect_op(")")
                else:
                    self.error("FILTER needs a parenthesised expression")
                g.elements.append(Filter(expr))
            else:
                patterns: List[TriplePattern] = []
                self.triples_block(patterns)
                g.elements.extend(patterns)
            if self.at_op("."):
                self.next()
        self.next()
        return g

    def triples_block(self, out: List[TriplePattern]):
        subj = self.node(subject=True)
        while True:
            if self.tok.kind == "WORD" and self.tok.value == "a":
                self.next()
                pred: Term = Iri(RDF_TYPE)
            elif self.tok.kind == "VAR":
                pred = self.variable()
            else:
                pred = self.iri()
            while True:
                out.append((subj, pred, self.node()))
                if not self.at_op(","):
                    break
                self.next()
            if not self.at_op(";"):
                return
            while self.at_op(";"):
                self.next()
            if self.at_op(".", "}"):
                return

    def node(self, subject: bool = False) -> Term:
        t = self.tok
        if t.kind == "VAR":
            return self.variable()
        if self.at_iri():
            return self.iri()
        if not subject and self.at_literal():
            return self.literal()
        if t.kind == "BNODE" or self.at_op("[", "("):
            self.error("blank nodes and collections are not supported in queries")
        self.error(f"unexpected {t.value or t.kind!r}")

    # -- expressions -------------------------------------------------------

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.at_op("||"):
            self.next()
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.unary()
        while self.at_op("&&"):
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.at_op("!"):
            self.next()
            return Not(self.unary())
        left = self.primary()
        if self.tok.kind == "OP" and self.tok.value in COMPARISONS:
            op = self.next().value
            return Compare(op, left, self.primary())
        return left

    def primary(self) -> Expr:
        if self.at_op("("):
            self.next()
            e = self.or_expr()
            self.expect_op(")")
            return e
        if self.tok.kind == "VAR":
            return TermExpr(self.variable())
        if self.at_iri():
            return TermExpr(self.iri())
        if self.at_literal():
            return TermExpr(self.literal())
        self.error(f"unexpected {self.tok.value or self.tok.kind!r} in expression")


def _expr_vars(e: Expr, acc: set) -> set:
    if isinstance(e, TermExpr):
        if isinstance(e.term, Variable):
            acc.add(e.term.name)
    elif isinstance(e, Not):
        _expr_vars(e.operand, acc)
    else:
        _expr_vars(e.left, acc)
        _expr_vars(e.right, acc)
    return acc


def validate(q: Query) -> None:
    bound = q.where.variables()
    if isinstance(q, ConstructQuery):
        for tp in q.template:
            for t in tp:
                if isinstance(t, Variable) and t.name not in bound:
                    raise QueryError(f"template variable ?{t.name} does not occur in WHERE")
            if isinstance(tp[0], Literal):
                raise QueryError("literal in subject position of template")
    else:
        for v in list(q.projection) + list(q.order_by):
            if v not in bound:
                raise QueryError(f"variable ?{v} does not occur in WHERE")


def parse_query(text: str, base: Optional[str] = None) -> Query:
    """Parse CONSTRUCT or SELECT text of the supported subset."""
    return SparqlParser(text, base).parse()
