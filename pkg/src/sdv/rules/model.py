"""Rules and rule sets."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterator, List, Set, Tuple, Union

from sdv.rdf.graph import TriplePattern
from sdv.rdf.terms import Variable
from sdv.rules.builtins import BuiltinAtom

AntecedentItem = Union[TriplePattern, BuiltinAtom]


@dataclass(frozen=True)
class Rule:
    id: str
    antecedent: Tuple[AntecedentItem, ...]
    consequent: Tuple[TriplePattern, ...]

    @property
    def patterns(self) -> List[TriplePattern]:
        return [a for a in self.antecedent if isinstance(a, tuple)]

    @property
    def builtins(self) -> List[BuiltinAtom]:
        return [a for a in self.antecedent if isinstance(a, BuiltinAtom)]

    def antecedent_variables(self) -> Set[str]:
        names: Set[str] = set()
        for a in self.antecedent:
            if isinstance(a, BuiltinAtom):
                names |= a.variables()
            else:
                names |= {t.name for t in a if isinstance(t, Variable)}
        return names

    def consequent_variables(self) -> Set[str]:
        return {t.name for tp in self.consequent for t in tp if isinstance(t, Variable)}

    def text(self) -> str:
        """Normalised N3 rendering, stable across formatting differences."""

        def item(a: AntecedentItem) -> str:
            if isinstance(a, BuiltinAtom):
                return str(a) + " ."
            return " ".join(t.n3() for t in a) + " ."

        ante = " ".join(item(a) for a in self.antecedent)
        cons = " ".join(item(c) for c in self.consequent)
        return "{ " + ante + " } => { " + cons + " } ."

    def digest(self) -> str:
        return hashlib.sha256(self.text().encode("utf-8")).hexdigest()


@dataclass
class RuleSet:
    rules: List[Rule] = field(default_factory=list)
    prefixes: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __getitem__(self, i: int) -> Rule:
        return self.rules[i]

    def by_id(self) -> dict:
        return {r.id: r for r in self.rules}

    def __add__(self, other: "RuleSet") -> "RuleSet":
        return RuleSet(self.rules + other.rules, {**self.prefixes, **other.prefixes})
