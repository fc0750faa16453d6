"""Builtin registry for rule antecedents.

Function builtins compute a value from bound inputs and bind (or check)
the object; filter builtins only admit or reject the current binding.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from sdv.rdf.graph import Binding
from sdv.rdf.terms import XSD_DATETIME, XSD_INTEGER, XSD_STRING, Iri, Literal, Term, Variable, numeric_value

log = logging.getLogger(__name__)

FUNC = "http://www.w3.org/2007/rif-builtin-function#"
MATH = "http://www.w3.org/2000/10/swap/math#"
LOG = "http://www.w3.org/2000/10/swap/log#"
STRING = "http://www.w3.org/2000/10/swap/string#"
TIME = "http://www.w3.org/2000/10/swap/time#"
LIST = "http://www.w3.org/2000/10/swap/list#"

# predicates in these namespaces are treated as builtins and must be registered
BUILTIN_NAMESPACES = (FUNC, MATH, LOG, STRING, TIME, LIST)


class RuleEvaluationError(RuntimeError):
    def __init__(self, message: str, rule_id: Optional[str] = None):
        super().__init__(f"rule {rule_id}: {message}" if rule_id else message)
        self.rule_id = rule_id


@dataclass(frozen=True)
class Builtin:
    iri: str
    kind: str  # "function" or "filter"
    arity: Optional[int]  # number of subject arguments; None = variadic
    fn: Callable[..., object]


REGISTRY: Dict[str, Builtin] = {}


def register(iri: str, kind: str, arity: Optional[int]):
    def deco(fn):
        REGISTRY[iri] = Builtin(iri, kind, arity, fn)
        return fn

    return deco


@dataclass(frozen=True)
class BuiltinAtom:
    iri: str
    args: Tuple[Term, ...]
    result: Term
    list_subject: bool = True

    def input_terms(self) -> Tuple[Term, ...]:
        if REGISTRY[self.iri].kind == "filter":
            return self.args + (self.result,)
        return self.args

    def variables(self) -> set:
        return {t.name for t in self.args + (self.result,) if isinstance(t, Variable)}

    def __str__(self):
        subj = " ".join(t.n3() for t in self.args)
        if self.list_subject:
            subj = f"({subj})"
        return f"{subj} <{self.iri}> {self.result.n3()}"


class _NoResult(Exception):
    pass


_DATETIME = re.compile(
    r"^(-?\d{4,})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(\.\d+)?(Z|[+-]\d{2}:\d{2})?$"
)


def _days_in_month(year: int, month: int) -> int:
    if month == 2:
        leap = year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)
        return 29 if leap else 28
    return 30 if month in (4, 6, 9, 11) else 31


def _datetime_fields(t: Term) -> Tuple[int, int, int]:
    if t.__class__ is not Literal or t.datatype != XSD_DATETIME:
        raise _NoResult(f"{t.n3()} is not an xsd:dateTime literal")
    m = _DATETIME.match(t.lexical)
    if not m:
        raise _NoResult(f"malformed xsd:dateTime {t.lexical!r}")
    year, month, day = int(m.group(1)), int(m.group(2)), int(m.group(3))
    hour, minute, second = int(m.group(4)), int(m.group(5)), int(m.group(6))
    if not 1 <= month <= 12 or not 1 <= day <= _days_in_month(year, month):
        raise _NoResult(f"invalid date in {t.lexical!r}")
    if hour > 24 or minute > 59 or second > 59 or (hour == 24 and (minute or second or m.group(7))):
        raise _NoResult(f"invalid time in {t.lexical!r}")
    if hour == 24:
        # 24:00:00 is the first instant of the following day
        day += 1
        if day > _days_in_month(year, month):
            day, month = 1, month + 1
            if month > 12:
                month, year = 1, year + 1
    return year, month, day


@register(FUNC + "year-from-dateTime", "function", 1)
def year_from_datetime(dt: Term) -> Term:
    return Literal(str(_datetime_fields(dt)[0]), XSD_INTEGER)


@register(FUNC + "month-from-dateTime", "function", 1)
def month_from_datetime(dt: Term) -> Term:
    return Literal(str(_datetime_fields(dt)[1]), XSD_INTEGER)


@register(FUNC + "day-from-dateTime", "function", 1)
def day_from_datetime(dt: Term) -> Term:
    return Literal(str(_datetime_fields(dt)[2]), XSD_INTEGER)


@register(FUNC + "concat", "function", None)
def concat(*args: Term) -> Term:
    parts = []
    for a in args:
        if a.__class__ is Literal:
            parts.append(a.lexical)
        elif a.__class__ is Iri:
            parts.append(a.value)
        else:
            raise _NoResult(f"cannot concatenate {a.n3()}")
    return Literal("".join(parts), XSD_STRING)


def _number(t: Term):
    if t.__class__ is not Literal or not t.is_numeric:
        raise _NoResult(f"{t.n3()} is not numeric")
    n = numeric_value(t)
    if n is None:
        raise _NoResult(f"malformed number {t.lexical!r}")
    return n


def _num_pair(a: Term, b: Term):
    x, y = _number(a), _number(b)
    if isinstance(x, float) or isinstance(y, float):
        return float(x), float(y)
    return x, y


@register(MATH + "greaterThan", "filter", 1)
def greater_than(a: Term, b: Term) -> bool:
    x, y = _num_pair(a, b)
    return x > y


@register(MATH + "lessThan", "filter", 1)
def less_than(a: Term, b: Term) -> bool:
    x, y = _num_pair(a, b)
    return x < y


@register(MATH + "equalTo", "filter", 1)
def math_equal_to(a: Term, b: Term) -> bool:
    x, y = _num_pair(a, b)
    return x == y


@register(LOG + "equalTo", "filter", 1)
def log_equal_to(a: Term, b: Term) -> bool:
    return a == b


@register(LOG + "notEqualTo", "filter", 1)
def log_not_equal_to(a: Term, b: Term) -> bool:
    return a != b


def is_builtin(iri: str) -> bool:
    return iri in REGISTRY or iri.startswith(BUILTIN_NAMESPACES)


def _resolve(t: Term, b: Binding) -> Optional[Term]:
    return b.get(t.name) if t.__class__ is Variable else t


def eval_builtin(
    atom: BuiltinAtom, b: Binding, warnings: Optional[List[str]] = None
) -> Iterator[Binding]:
    """Yield ``b`` (possibly extended by the result variable) if the atom holds."""
    builtin = REGISTRY.get(atom.iri)
    if builtin is None:
        raise RuleEvaluationError(f"unknown builtin <{atom.iri}>")
    inputs = []
    for t in atom.input_terms():
        v = _resolve(t, b)
        if v is None:
            raise RuleEvaluationError(f"builtin input {t.n3()} is unbound in: {atom}")
        inputs.append(v)
    try:
        if builtin.kind == "filter":
            if builtin.fn(*inputs):
                yield b
            return
        value = builtin.fn(*inputs)
    except _NoResult as e:
        msg = f"{atom}: {e}"
        log.warning(msg)
        if warnings is not None:
            warnings.append(msg)
        return
    current = _resolve(atom.result, b)
    if current is None:
        ext = dict(b)
        ext[atom.result.name] = value
        yield ext
    elif current == value:
        yield b


def check_arity(atom: BuiltinAtom) -> None:
    builtin = REGISTRY[atom.iri]
    if builtin.arity is not None and len(atom.args) != builtin.arity:
        raise ValueError(f"builtin <{atom.iri}> takes {builtin.arity} argument(s), got {len(atom.args)}")
    if builtin.arity is None and not atom.args:
        raise ValueError(f"builtin <{atom.iri}> needs at least one argument")


def evaluate_inputs(iri: str, inputs: Sequence[Term]):
    """Apply a builtin to concrete inputs: a term for functions, a bool for filters, None if no result."""
    builtin = REGISTRY[iri]
    try:
        return builtin.fn(*inputs)
    except _NoResult:
        return None
