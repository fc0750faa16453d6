"""N3 rule conversion: parsing, forward chaining, proofs and proof checking."""

from sdv.rules.builtins import REGISTRY, BuiltinAtom, RuleEvaluationError, eval_builtin
from sdv.rules.checker import Verdict, check_proof
from sdv.rules.engine import FIXPOINT, SINGLE_PASS, Conversion, FixpointError, apply_rules
from sdv.rules.model import Rule, RuleSet
from sdv.rules.parser import RuleError, parse_rules
from sdv.rules.proof import Proof, ProofStep

__all__ = [
    "FIXPOINT",
    "REGISTRY",
    "SINGLE_PASS",
    "BuiltinAtom",
    "Conversion",
    "FixpointError",
    "Proof",
    "ProofStep",
    "Rule",
    "RuleError",
    "RuleEvaluationError",
    "RuleSet",
    "Verdict",
    "apply_rules",
    "check_proof",
    "eval_builtin",
    "parse_rules",
]
