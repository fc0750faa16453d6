"""Reader for the N3 rule subset.

A rule file holds prefix declarations and ``{ ... } => { ... } .``
implications (``log:implies`` may be spelled out). Antecedent triples
whose predicate is a builtin become builtin atoms; their subject may be a
list ``(?a ?b)``. Blank nodes, nested formulas and ground facts are
rejected.
"""

from __future__ import annotations

from typing import List, Optional

from sdv.rdf.lexer import SyntaxErrorAt, TokenParser
from sdv.rdf.terms import RDF_TYPE, Iri, Literal, Term
from sdv.rules.builtins import LOG, REGISTRY, BuiltinAtom, check_arity, is_builtin
from sdv.rules.model import AntecedentItem, Rule, RuleSet

RuleSyntaxError = SyntaxErrorAt


class RuleError(ValueError):
    pass


class N3RuleParser(TokenParser):
    variables_allowed = True

    def __init__(self, text: str, source: str = "rules.n3", base: Optional[str] = None):
        super().__init__(text, base)
        self.source = source

    def parse(self) -> RuleSet:
        rules: List[Rule] = []
        while self.tok.kind != "EOF":
            if self.try_directive():
                continue
            if not self.at_op("{"):
                self.error("expected a rule '{ ... } => { ... } .'")
            start = self.tok
            antecedent = self.formula(antecedent=True)
            if self.at_op("=>"):
                self.next()
            elif self.at_iri() and self._peek_implies():
                self.iri()
            else:
                self.error("expected '=>' after antecedent")
            consequent = self.formula(antecedent=False)
            self.expect_op(".")
            rule = Rule(f"{self.source}#{len(rules) + 1}", tuple(antecedent), tuple(consequent))
            self._validate(rule, start)
            rules.append(rule)
        return RuleSet(rules, dict(self.prefixes))

    def _peek_implies(self) -> bool:
        t = self.tok
        if t.kind == "IRI":
            return t.value[1:-1] == LOG + "implies"
        return self.prefixes.get(t.extra) == LOG and t.value == "implies"

    def formula(self, antecedent: bool) -> List[AntecedentItem]:
        self.expect_op("{")
        items: List[AntecedentItem] = []
        while not self.at_op("}"):
            if self.tok.kind == "EOF":
                self.error("unterminated formula")
            self.statement(items, antecedent)
            if self.at_op("."):
                self.next()
            elif not self.at_op("}"):
                self.error(f"expected '.' or '}}', found {self.tok.value!r}")
        self.next()
        return items

    def statement(self, items: List[AntecedentItem], antecedent: bool):
        list_subject = None
        if self.at_op("("):
            self.next()
            list_subject = []
            while not self.at_op(")"):
                list_subject.append(self.term())
            self.next()
            subj = None
        else:
            subj = self.term()
        while True:
            tok = self.tok
            if tok.kind == "WORD" and tok.value == "a":
                self.next()
                pred: Term = Iri(RDF_TYPE)
            elif tok.kind == "VAR":
                pred = self.variable()
            else:
                pred = self.iri()
            while True:
                obj = self.term()
                items.append(self._item(subj, list_subject, pred, obj, antecedent, tok))
                if not self.at_op(","):
                    break
                self.next()
            if not self.at_op(";"):
                return
            while self.at_op(";"):
                self.next()
            if self.at_op(".", "}"):
                return

    def _item(self, subj, list_subject, pred, obj, antecedent, tok) -> AntecedentItem:
        if isinstance(pred, Iri) and is_builtin(pred.value):
            if not antecedent:
                self.error(f"builtin <{pred.value}> is not allowed in a consequent", tok)
            if pred.value not in REGISTRY:
                raise RuleError(f"unknown builtin IRI <{pred.value}> (line {tok.line})")
            if list_subject is not None:
                atom = BuiltinAtom(pred.value, tuple(list_subject), obj, True)
            else:
                atom = BuiltinAtom(pred.value, (subj,), obj, False)
            try:
                check_arity(atom)
            except ValueError as e:
                raise RuleError(f"{e} (line {tok.line})") from None
            return atom
        if list_subject is not None:
            self.error("list subjects are only allowed for builtins", tok)
        if isinstance(subj, Literal):
            self.error("literal in subject position", tok)
        return (subj, pred, obj)

    def term(self) -> Term:
        t = self.tok
        if t.kind == "VAR":
            return self.variable()
        if self.at_iri():
            return self.iri()
        if self.at_literal():
            return self.literal()
        if t.kind == "BNODE" or self.at_op("["):
            self.error("blank nodes are not supported in rules")
        if self.at_op("{", "("):
            self.error("nested formulas and lists are not supported here")
        self.error(f"unexpected {t.value or t.kind!r}")

    def _validate(self, rule: Rule, tok) -> None:
        missing = rule.consequent_variables() - rule.antecedent_variables()
        if missing:
            names = ", ".join("?" + m for m in sorted(missing))
            raise RuleError(f"rule {rule.id} (line {tok.line}) is not range-restricted: {names} absent from antecedent")
        if not rule.consequent:
            raise RuleError(f"rule {rule.id} (line {tok.line}) has an empty consequent")


def parse_rules(text: str, source: str = "rules.n3") -> RuleSet:
    """Parse N3 rule text; rule ids are ``<source>#<ordinal>``."""
    return N3RuleParser(text, source).parse()
