"""Proof documents: asserted sources, ordered rule firings, conclusion hash.

JSON layout::

    {
      "version": 1,
      "sources": [{"id": "<url or name>", "hash": "<sha256 of canonical N-Triples>"}],
      "rules": [{"id": "rules.n3#1", "digest": "<sha256 of normalised rule text>"}],
      "steps": [
        {
          "id": "s1",
          "rule": "rules.n3#1",
          "binding": {"patient": "<http://...>"},
          "premises": [
            {"triple": ["<s>", "<p>", "<o>"], "asserted": "<source id>"},
            {"triple": [...], "derived": "s0"},
            {"builtin": "<iri>", "inputs": ["..."], "output": "..."}
          ],
          "conclusions": [["<s>", "<p>", "<o>"]]
        }
      ],
      "conclusion_hash": "<sha256 of the derived graph>"
    }

Terms use N-Triples syntax. Premises follow antecedent order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from sdv.rdf.graph import Triple
from sdv.rdf.terms import Term, parse_term

PROOF_VERSION = 1


@dataclass
class Asserted:
    source: str


@dataclass
class Derived:
    step: str


@dataclass
class BuiltinEvaluation:
    builtin: str
    inputs: Tuple[Term, ...]
    output: Term


Provenance = Union[Asserted, Derived]


@dataclass
class Premise:
    """A matched antecedent triple with its provenance, or a builtin evaluation."""

    triple: Optional[Triple] = None
    provenance: Optional[Provenance] = None
    evaluation: Optional[BuiltinEvaluation] = None


@dataclass
class ProofStep:
    id: str
    rule: str
    binding: Dict[str, Term]
    premises: List[Premise]
    conclusions: List[Triple]


@dataclass
class Proof:
    sources: List[Tuple[str, str]]
    rules: List[Tuple[str, str]]
    steps: List[ProofStep] = field(default_factory=list)
    conclusion_hash: str = ""

    def to_json(self) -> dict:
        return {
            "version": PROOF_VERSION,
            "sources": [{"id": i, "hash": h} for i, h in self.sources],
            "rules": [{"id": i, "digest": d} for i, d in self.rules],
            "steps": [_step_json(s) for s in self.steps],
            "conclusion_hash": self.conclusion_hash,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, doc: dict) -> "Proof":
        return proof_from_json(doc)

    @classmethod
    def loads(cls, text: str) -> "Proof":
        return proof_from_json(json.loads(text))


def _triple_json(t: Triple) -> List[str]:
    return [x.n3() for x in t]


def _step_json(s: ProofStep) -> dict:
    premises = []
    for p in s.premises:
        if p.evaluation is not None:
            e = p.evaluation
            premises.append({"builtin": e.builtin, "inputs": [t.n3() for t in e.inputs], "output": e.output.n3()})
        elif isinstance(p.provenance, Asserted):
            premises.append({"triple": _triple_json(p.triple), "asserted": p.provenance.source})
        else:
            premises.append({"triple": _triple_json(p.triple), "derived": p.provenance.step})
    return {
        "id": s.id,
        "rule": s.rule,
        "binding": {k: v.n3() for k, v in sorted(s.binding.items())},
        "premises": premises,
        "conclusions": [_triple_json(t) for t in s.conclusions],
    }


class ProofFormatError(ValueError):
    def __init__(self, message: str, step: Optional[str] = None):
        super().__init__(message)
        self.step = step


def _triple(raw, step) -> Triple:
    if not isinstance(raw, list) or len(raw) != 3:
        raise ProofFormatError("a triple must be a list of three terms", step)
    return tuple(_term(x, step) for x in raw)


def _term(raw, step) -> Term:
    if not isinstance(raw, str):
        raise ProofFormatError(f"term must be a string, got {raw!r}", step)
    try:
        return parse_term(raw)
    except ValueError as e:
        raise ProofFormatError(str(e), step) from None


def proof_from_json(doc: dict) -> Proof:
    """Structural decoding; semantic validation is the checker's job."""
    if not isinstance(doc, dict) or doc.get("version") != PROOF_VERSION:
        raise ProofFormatError("not a version-1 proof document")
    try:
        sources = [(s["id"], s["hash"]) for s in doc["sources"]]
        rules = [(r["id"], r["digest"]) for r in doc["rules"]]
        raw_steps = doc["steps"]
        conclusion_hash = doc["conclusion_hash"]
    except (KeyError, TypeError) as e:
        raise ProofFormatError(f"missing or malformed field: {e}") from None
    steps = []
    for raw in raw_steps:
        sid = raw.get("id") if isinstance(raw, dict) else None
        try:
            binding = {k: _term(v, sid) for k, v in raw["binding"].items()}
            premises = []
            for p in raw["premises"]:
                if "builtin" in p:
                    premises.append(
                        Premise(
                            evaluation=BuiltinEvaluation(
                                p["builtin"], tuple(_term(x, sid) for x in p["inputs"]), _term(p["output"], sid)
                            )
                        )
                    )
                elif "asserted" in p:
                    premises.append(Premise(_triple(p["triple"], sid), Asserted(p["asserted"])))
                elif "derived" in p:
                    premises.append(Premise(_triple(p["triple"], sid), Derived(p["derived"])))
                else:
                    raise ProofFormatError("premise without provenance", sid)
            conclusions = [_triple(c, sid) for c in raw["conclusions"]]
            steps.append(ProofStep(sid, raw["rule"], binding, premises, conclusions))
        except (KeyError, TypeError, AttributeError) as e:
            raise ProofFormatError(f"malformed step: {e}", sid) from None
    return Proof(sources, rules, steps, conclusion_hash)
