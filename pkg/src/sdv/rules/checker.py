"""Independent proof checker.

Re-validates a proof against the asserted source graphs and the rule set
without running inference: every step is replayed by substituting its
binding into the named rule and comparing the result with the recorded
premises and conclusions. Builtin evaluations are recomputed with this
module's own implementations; nothing here calls the inference engine.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from decimal import Decimal, InvalidOperation
from typing import Dict, Mapping, Optional, Sequence, Set, Union

from sdv.rdf.canon import graph_hash
from sdv.rdf.graph import Graph, Triple, substitute
from sdv.rdf.terms import BlankNode, Iri, Literal, Term, Variable
from sdv.rules.builtins import BuiltinAtom
from sdv.rules.model import RuleSet
from sdv.rules.proof import Asserted, Derived, Proof, ProofFormatError, proof_from_json

_XSD = "http://www.w3.org/2001/XMLSchema#"
_FUNC = "http://www.w3.org/2007/rif-builtin-function#"
_MATH = "http://www.w3.org/2000/10/swap/math#"
_LOG = "http://www.w3.org/2000/10/swap/log#"
_NUMERIC = {_XSD + n for n in ("integer", "decimal", "double", "float", "int", "long", "short", "nonNegativeInteger", "positiveInteger")}


@dataclass
class Verdict:
    valid: bool
    reason: str = ""
    step: Optional[str] = None

    def __bool__(self) -> bool:
        return self.valid

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        where = f" at step {self.step}" if self.step else ""
        return f"invalid{where}: {self.reason}"


def _invalid(reason: str, step: Optional[str] = None) -> Verdict:
    return Verdict(False, reason, step)


# -- builtin re-evaluation ------------------------------------------------------

_DT = re.compile(r"^(-?\d{4,})-(\d\d)-(\d\d)T(\d\d):(\d\d):(\d\d)(\.\d+)?(?:Z|[+-]\d\d:\d\d)?$")


def _date_part(t: Term, index: int) -> Optional[Term]:
    if not isinstance(t, Literal) or t.datatype != _XSD + "dateTime":
        return None
    m = _DT.match(t.lexical)
    if not m:
        return None
    year, month, day = (int(m.group(i)) for i in (1, 2, 3))
    hh, mm, ss = (int(m.group(i)) for i in (4, 5, 6))
    end_of_day = hh == 24 and mm == 0 and ss == 0 and m.group(7) is None
    # validate on a year with the same leap-cycle position, within datetime's range
    proxy = 2000 + year % 400
    try:
        stamp = datetime(proxy, month, day, 0 if end_of_day else hh, mm, ss)
    except ValueError:
        return None
    if end_of_day:
        stamp += timedelta(days=1)
    fields = (year + (stamp.year - proxy), stamp.month, stamp.day)
    return Literal(str(fields[index]), _XSD + "integer")


def _number(t: Term):
    if not isinstance(t, Literal) or t.datatype not in _NUMERIC:
        return None
    try:
        if t.datatype in (_XSD + "double", _XSD + "float"):
            return float(t.lexical)
        return Decimal(t.lexical)
    except (ValueError, InvalidOperation):
        return None


def _compare(a: Term, b: Term, op: str) -> bool:
    x, y = _number(a), _number(b)
    if x is None or y is None:
        return False
    if isinstance(x, float) or isinstance(y, float):
        x, y = float(x), float(y)
    return {"gt": x > y, "lt": x < y, "eq": x == y}[op]


def _concat(args: Sequence[Term]) -> Optional[Term]:
    out = ""
    for a in args:
        if isinstance(a, Literal):
            out += a.lexical
        elif isinstance(a, Iri):
            out += a.value
        else:
            return None
    return Literal(out)


_FUNCTIONS = {
    _FUNC + "year-from-dateTime": lambda args: _date_part(args[0], 0) if len(args) == 1 else None,
    _FUNC + "month-from-dateTime": lambda args: _date_part(args[0], 1) if len(args) == 1 else None,
    _FUNC + "day-from-dateTime": lambda args: _date_part(args[0], 2) if len(args) == 1 else None,
    _FUNC + "concat": lambda args: _concat(args) if args else None,
}
_FILTERS = {
    _MATH + "greaterThan": lambda a, b: _compare(a, b, "gt"),
    _MATH + "lessThan": lambda a, b: _compare(a, b, "lt"),
    _MATH + "equalTo": lambda a, b: _compare(a, b, "eq"),
    _LOG + "equalTo": lambda a, b: a == b,
    _LOG + "notEqualTo": lambda a, b: a != b,
}


def builtin_holds(iri: str, inputs: Sequence[Term], output: Term) -> bool:
    if iri in _FUNCTIONS:
        return _FUNCTIONS[iri](list(inputs)) == output
    if iri in _FILTERS:
        return len(inputs) == 1 and _FILTERS[iri](inputs[0], output)
    return False


# -- replay ---------------------------------------------------------------------


def _is_ground(t) -> bool:
    return all(x is not None and not isinstance(x, Variable) for x in t)


def _valid_triple(t) -> bool:
    s, p, _ = t
    return isinstance(s, (Iri, BlankNode)) and isinstance(p, Iri)


def check_proof(
    proof: Union[Proof, dict, str],
    asserted: Union[Sequence[Graph], Mapping[str, Graph]],
    rules: RuleSet,
) -> Verdict:
    """Validate ``proof`` against asserted graphs (by source id, or in source order) and ``rules``."""
    try:
        if isinstance(proof, str):
            import json

            proof = proof_from_json(json.loads(proof))
        elif isinstance(proof, dict):
            proof = proof_from_json(proof)
    except ProofFormatError as e:
        return _invalid(f"malformed proof: {e}", e.step)
    except ValueError as e:
        return _invalid(f"malformed proof: {e}")

    source_ids = [sid for sid, _ in proof.sources]
    if len(set(source_ids)) != len(source_ids):
        return _invalid("duplicate source id")
    if isinstance(asserted, Mapping):
        graphs: Dict[str, Graph] = dict(asserted)
    else:
        asserted = list(asserted)
        if len(asserted) != len(source_ids):
            return _invalid(f"proof names {len(source_ids)} sources, {len(asserted)} graphs supplied")
        graphs = dict(zip(source_ids, asserted))
    for sid, digest in proof.sources:
        if sid not in graphs:
            return _invalid(f"no graph supplied for source {sid!r}")
        if graph_hash(graphs[sid]) != digest:
            return _invalid(f"source {sid!r} does not match its recorded hash")

    by_id = {r.id: r for r in rules}
    recorded = dict(proof.rules)
    for rid, digest in proof.rules:
        rule = by_id.get(rid)
        if rule is None:
            return _invalid(f"rule-id mismatch: {rid} not in the supplied rule set")
        if rule.digest() != digest:
            return _invalid(f"rule-id mismatch: {rid} differs from the supplied rule")

    concluded: Dict[str, Set[Triple]] = {}
    all_conclusions: Set[Triple] = set()
    for step in proof.steps:
        sid = step.id
        if not isinstance(sid, str) or not sid:
            return _invalid("step without id")
        if sid in concluded:
            return _invalid("duplicate step id", sid)
        rule = by_id.get(step.rule)
        if rule is None or step.rule not in recorded:
            return _invalid(f"unknown rule {step.rule!r}", sid)

        needed = rule.antecedent_variables()
        if set(step.binding) != needed:
            return _invalid("binding does not cover exactly the antecedent variables", sid)
        if any(isinstance(v, Variable) for v in step.binding.values()):
            return _invalid("binding maps a variable to a variable", sid)

        if len(step.premises) != len(rule.antecedent):
            return _invalid("premise count differs from the antecedent", sid)
        for item, prem in zip(rule.antecedent, step.premises):
            if isinstance(item, BuiltinAtom):
                ev = prem.evaluation
                if ev is None or ev.builtin != item.iri:
                    return _invalid(f"expected an evaluation of <{item.iri}>", sid)
                inputs = tuple(step.binding[t.name] if isinstance(t, Variable) else t for t in item.args)
                output = step.binding[item.result.name] if isinstance(item.result, Variable) else item.result
                if inputs != tuple(ev.inputs) or output != ev.output:
                    return _invalid(f"builtin evaluation of <{item.iri}> does not match the binding", sid)
                if not builtin_holds(item.iri, inputs, output):
                    return _invalid(f"builtin <{item.iri}> does not hold for the recorded values", sid)
                continue
            if prem.evaluation is not None or prem.triple is None:
                return _invalid("expected a matched triple premise", sid)
            expected = substitute(item, step.binding)
            if not _is_ground(expected) or expected != tuple(prem.triple):
                return _invalid("premise differs from the substituted antecedent", sid)
            prov = prem.provenance
            if isinstance(prov, Asserted):
                g = graphs.get(prov.source)
                if g is None or prov.source not in source_ids:
                    return _invalid(f"premise cites unknown source {prov.source!r}", sid)
                if expected not in g:
                    return _invalid(f"premise not asserted in source {prov.source!r}", sid)
            elif isinstance(prov, Derived):
                earlier = concluded.get(prov.step)
                if earlier is None:
                    return _invalid(f"premise cites step {prov.step!r} that does not precede it", sid)
                if expected not in earlier:
                    return _invalid(f"premise is not a conclusion of step {prov.step!r}", sid)
            else:
                return _invalid("premise without provenance", sid)

        expected_conclusions = []
        for tp in rule.consequent:
            t = substitute(tp, step.binding)
            if not _is_ground(t):
                return _invalid("consequent not ground under the binding", sid)
            if _valid_triple(t):
                expected_conclusions.append(t)
        if [tuple(c) for c in step.conclusions] != expected_conclusions:
            return _invalid("conclusions differ from the substituted consequent", sid)
        concluded[sid] = set(expected_conclusions)
        all_conclusions |= concluded[sid]

    if graph_hash(Graph(all_conclusions)) != proof.conclusion_hash:
        return _invalid("conclusion hash does not match the union of step conclusions")
    return Verdict(True)
