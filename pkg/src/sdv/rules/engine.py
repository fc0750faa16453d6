"""Forward-chaining application of N3 rules, with optional proof recording.

Single-pass mode matches every rule once against the union of the inputs.
Fixpoint mode re-asserts derived triples and iterates semi-naively: after
the first round a firing must use at least one triple derived in the
previous round, so no combination of premises is enumerated twice.
"""

from __future__ import annotations

import logging
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple

from sdv.rdf.canon import graph_hash
from sdv.rdf.graph import Binding, Graph, Triple, TriplePattern, match, plan
from sdv.rdf.terms import BlankNode, Iri, Term, Variable
from sdv.rules.builtins import BuiltinAtom, RuleEvaluationError, eval_builtin
from sdv.rules.model import Rule, RuleSet
from sdv.rules.proof import Asserted, BuiltinEvaluation, Derived, Premise, Proof, ProofStep

log = logging.getLogger(__name__)

SINGLE_PASS = "single-pass"
FIXPOINT = "fixpoint"
MODES = (SINGLE_PASS, FIXPOINT)


class FixpointError(RuntimeError):
    pass


class Conversion(NamedTuple):
    graph: Graph
    proof: Optional[Proof]
    warnings: List[str]


# (pattern, graph to match in, triples to exclude)
_Spec = Tuple[TriplePattern, Graph, Optional[Set[Triple]]]


def _ground(t: Term, b: Binding) -> Term:
    return b[t.name] if t.__class__ is Variable else t


def _ready(atom: BuiltinAtom, b: Binding) -> bool:
    return all(t.__class__ is not Variable or t.name in b for t in atom.input_terms())


def _join(specs: List[_Spec], k: int, atoms: List[BuiltinAtom], b: Binding, warnings: List[str]) -> Iterator[Binding]:
    for n, atom in enumerate(atoms):
        if _ready(atom, b):
            rest = atoms[:n] + atoms[n + 1 :]
            for ext in eval_builtin(atom, b, warnings):
                yield from _join(specs, k, rest, ext, warnings)
            return
    if k == len(specs):
        if atoms:
            raise RuleEvaluationError(f"builtin input never bound in: {atoms[0]}")
        yield b
        return
    tp, g, exclude = specs[k]
    for ext in match(g, tp, b):
        if exclude is not None and tuple(_ground(t, ext) for t in tp) in exclude:
            continue
        yield from _join(specs, k + 1, atoms, ext, warnings)


def _planned(specs: List[_Spec]) -> List[_Spec]:
    def estimate(i: int) -> int:
        tp, g, _ = specs[i]
        return g.count_matching(*(None if t.__class__ is Variable else t for t in tp))

    return [specs[i] for i in plan([s[0] for s in specs], (), estimate)]


def firings(
    rule: Rule,
    full: Graph,
    warnings: List[str],
    delta: Optional[Graph] = None,
) -> Iterator[Binding]:
    """Complete antecedent bindings of ``rule``.

    With ``delta`` given, only bindings using at least one delta triple are
    produced, each exactly once (patterns before the delta position are
    restricted to ``full - delta``).
    """
    patterns = rule.patterns
    atoms = list(rule.builtins)
    if delta is None:
        yield from _join(_planned([(tp, full, None) for tp in patterns]), 0, atoms, {}, warnings)
        return
    delta_set = delta.triples
    for k in range(len(patterns)):
        specs: List[_Spec] = []
        for j, tp in enumerate(patterns):
            if j < k:
                specs.append((tp, full, delta_set))
            elif j == k:
                specs.append((tp, delta, None))
            else:
                specs.append((tp, full, None))
        yield from _join(_planned(specs), 0, atoms, {}, warnings)


def instantiate_consequent(rule: Rule, b: Binding) -> List[Triple]:
    """Consequent triples under ``b``; instantiations that are not valid RDF are dropped."""
    out = []
    for tp in rule.consequent:
        s, p, o = (_ground(t, b) for t in tp)
        if s.__class__ in (Iri, BlankNode) and p.__class__ is Iri:
            out.append((s, p, o))
    return out


class _Recorder:
    def __init__(self, inputs: Sequence[Graph], sources: Sequence[str], rules: RuleSet):
        self.inputs = inputs
        self.sources = sources
        self.steps: List[ProofStep] = []
        self.first_step: Dict[Triple, str] = {}
        self.rules = rules

    def provenance(self, t: Triple):
        for g, sid in zip(self.inputs, self.sources):
            if t in g:
                return Asserted(sid)
        step = self.first_step.get(t)
        if step is None:
            raise AssertionError(f"premise {t} has no justification")
        return Derived(step)

    def record(self, rule: Rule, b: Binding, conclusions: List[Triple]) -> None:
        sid = f"s{len(self.steps) + 1}"
        premises = []
        for item in rule.antecedent:
            if isinstance(item, BuiltinAtom):
                premises.append(
                    Premise(
                        evaluation=BuiltinEvaluation(
                            item.iri, tuple(_ground(t, b) for t in item.args), _ground(item.result, b)
                        )
                    )
                )
            else:
                t = tuple(_ground(x, b) for x in item)
                premises.append(Premise(t, self.provenance(t)))
        self.steps.append(ProofStep(sid, rule.id, dict(b), premises, conclusions))
        for t in conclusions:
            self.first_step.setdefault(t, sid)

    def proof(self, derived: Graph) -> Proof:
        return Proof(
            sources=[(sid, graph_hash(g)) for sid, g in zip(self.sources, self.inputs)],
            rules=[(r.id, r.digest()) for r in self.rules],
            steps=self.steps,
            conclusion_hash=graph_hash(derived),
        )


def apply_rules(
    inputs: Sequence[Graph],
    rules: RuleSet,
    mode: str = SINGLE_PASS,
    want_proof: bool = False,
    sources: Optional[Sequence[str]] = None,
    all_justifications: bool = False,
    max_iterations: int = 100,
) -> Conversion:
    """Derive the consequents of ``rules`` over the union of ``inputs``.

    Returns the derived triples (not the inputs), the proof when requested,
    and any builtin warnings.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    inputs = list(inputs)
    sources = list(sources) if sources is not None else [f"input-{i}" for i in range(len(inputs))]
    if len(sources) != len(inputs):
        raise ValueError("one source id per input graph is required")
    warnings: List[str] = []
    facts = inputs[0].union(*inputs[1:]) if inputs else Graph()
    recorder = _Recorder(inputs, sources, rules) if want_proof else None
    derived: Set[Triple] = set()

    def fire(rule: Rule, b: Binding, new: Set[Triple]) -> None:
        conclusions = instantiate_consequent(rule, b)
        fresh = [t for t in conclusions if t not in derived]
        if recorder is not None and (fresh or all_justifications):
            recorder.record(rule, b, conclusions)
        for t in fresh:
            derived.add(t)
            if t not in facts:
                new.add(t)

    def run(rule: Rule, bindings: Iterator[Binding], new: Set[Triple]) -> None:
        try:
            for b in bindings:
                fire(rule, b, new)
        except RuleEvaluationError as e:
            if e.rule_id is None:
                raise RuleEvaluationError(str(e), rule.id) from e
            raise

    new: Set[Triple] = set()
    for rule in rules:
        run(rule, firings(rule, facts, warnings), new)

    if mode == FIXPOINT:
        rounds = 1
        while new:
            if rounds >= max_iterations:
                raise FixpointError(f"no fixpoint after {max_iterations} iterations")
            rounds += 1
            delta = Graph.trusted(new)
            facts = Graph.trusted(facts.triples | new)
            new = set()
            for rule in rules:
                if not rule.patterns:
                    continue
                run(rule, firings(rule, facts, warnings, delta=delta), new)
        log.debug("fixpoint reached after %d rounds", rounds)

    graph = Graph.trusted(derived, prefixes=rules.prefixes)
    proof = recorder.proof(graph) if recorder is not None else None
    return Conversion(graph, proof, warnings)
