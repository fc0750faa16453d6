"""Evaluation of CONSTRUCT/SELECT queries over an in-memory Graph.

Basic graph patterns are joined by index nested loops, picking at each
step the pattern with the fewest candidate triples. OPTIONAL is a
left outer join evaluated bottom-up and hash-joined on shared variables;
FILTERs of a group apply to the whole group, and filters directly inside
an OPTIONAL group are its join condition.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from sdv.rdf.graph import Binding, Graph, TriplePattern, match, plan
from sdv.rdf.terms import (
    XSD_BOOLEAN,
    XSD_STRING,
    BlankNode,
    Iri,
    Literal,
    Term,
    Variable,
    numeric_value,
)
from sdv.query.sparql import (
    And,
    Compare,
    ConstructQuery,
    Expr,
    Filter,
    Group,
    Not,
    Optional_,
    Or,
    SelectQuery,
    TermExpr,
)

Row = Tuple[Optional[Term], ...]


class _ExprError(Exception):
    """Evaluation error inside a FILTER expression (SPARQL 'type error')."""


# -- expressions --------------------------------------------------------------


def _value(e: Expr, b: Binding) -> Term:
    if isinstance(e, TermExpr):
        t = e.term
        if t.__class__ is Variable:
            v = b.get(t.name)
            if v is None:
                raise _ExprError(f"unbound ?{t.name}")
            return v
        return t
    return Literal("true" if _truth(e, b) else "false", XSD_BOOLEAN)


def _ebv(t: Term) -> bool:
    if t.__class__ is not Literal:
        raise _ExprError("no effective boolean value for non-literal")
    if t.datatype == XSD_BOOLEAN:
        if t.lexical in ("true", "1"):
            return True
        if t.lexical in ("false", "0"):
            return False
        raise _ExprError("malformed boolean")
    if t.is_numeric:
        n = numeric_value(t)
        if n is None:
            raise _ExprError("malformed number")
        return n != 0
    if t.datatype == XSD_STRING or t.language:
        return t.lexical != ""
    raise _ExprError("no effective boolean value")


def _numbers(a: Term, b: Term):
    if a.__class__ is Literal and b.__class__ is Literal and a.is_numeric and b.is_numeric:
        x, y = numeric_value(a), numeric_value(b)
        if x is None or y is None:
            raise _ExprError("malformed number")
        if isinstance(x, float) or isinstance(y, float):
            return float(x), float(y)
        return x, y
    return None


def compare_terms(op: str, a: Term, b: Term) -> bool:
    """FILTER comparison; raises on incomparable operands."""
    nums = _numbers(a, b)
    if op in ("=", "!="):
        eq = nums[0] == nums[1] if nums else a == b
        return eq if op == "=" else not eq
    if nums:
        x, y = nums
    elif (
        a.__class__ is Literal
        and b.__class__ is Literal
        and a.datatype == b.datatype
        and a.language == b.language
        and not a.is_numeric
    ):
        x, y = a.lexical, b.lexical
    else:
        raise _ExprError(f"cannot order {a!r} and {b!r}")
    if op == "<":
        return x < y
    if op == "<=":
        return x <= y
    if op == ">":
        return x > y
    return x >= y


def _truth(e: Expr, b: Binding) -> bool:
    if isinstance(e, Compare):
        return compare_terms(e.op, _value(e.left, b), _value(e.right, b))
    if isinstance(e, Not):
        return not _truth(e.operand, b)
    if isinstance(e, And):
        try:
            left = _truth(e.left, b)
        except _ExprError:
            if _truth(e.right, b) is False:
                return False
            raise
        return left and _truth(e.right, b)
    if isinstance(e, Or):
        try:
            left = _truth(e.left, b)
        except _ExprError:
            if _truth(e.right, b) is True:
                return True
            raise
        return left or _truth(e.right, b)
    return _ebv(_value(e, b))


def passes(e: Expr, b: Binding) -> bool:
    try:
        return _truth(e, b)
    except _ExprError:
        return False


# -- patterns -----------------------------------------------------------------


def _constants(tp: TriplePattern):
    return tuple(None if t.__class__ is Variable else t for t in tp)


def join_bgp(g: Graph, patterns: Sequence[TriplePattern], solutions: Iterable[Binding]) -> List[Binding]:
    """Extend each solution by every match of the conjunctive pattern list."""
    solutions = list(solutions)
    if not solutions or not patterns:
        return solutions
    order = plan(patterns, solutions[0].keys(), lambda i: g.count_matching(*_constants(patterns[i])))
    ordered = [patterns[i] for i in order]
    out: List[Binding] = []
    for seed in solutions:
        _extend(g, ordered, 0, seed, out)
    return out


def _extend(g: Graph, ordered: List[TriplePattern], k: int, b: Binding, out: List[Binding]) -> None:
    if k == len(ordered) - 1:
        out.extend(match(g, ordered[k], b))
        return
    for ext in match(g, ordered[k], b):
        _extend(g, ordered, k + 1, ext, out)


def _compatible(a: Binding, b: Binding) -> bool:
    for k, v in b.items():
        w = a.get(k)
        if w is not None and w != v:
            return False
    return True


def _left_join(left: List[Binding], right: List[Binding], conds: List[Expr]) -> List[Binding]:
    if not right:
        return list(left)
    certain = set(right[0])
    for r in right[1:]:
        certain &= set(r)
    indexes: Dict[tuple, Dict[tuple, List[Binding]]] = {}
    out: List[Binding] = []
    for mu in left:
        keys = tuple(sorted(certain & set(mu)))
        idx = indexes.get(keys)
        if idx is None:
            idx = indexes[keys] = {}
            for r in right:
                idx.setdefault(tuple(r[k] for k in keys), []).append(r)
        found = False
        for r in idx.get(tuple(mu[k] for k in keys), ()):
            if not _compatible(mu, r):
                continue
            merged = {**mu, **r}
            if all(passes(c, merged) for c in conds):
                out.append(merged)
                found = True
        if not found:
            out.append(mu)
    return out


def _eval_group(g: Graph, group: Group, solutions: List[Binding]) -> Tuple[List[Binding], List[Expr]]:
    filters: List[Expr] = []
    pending: List[TriplePattern] = []
    for el in group.elements:
        if isinstance(el, tuple):
            pending.append(el)
            continue
        if pending:
            solutions = join_bgp(g, pending, solutions)
            pending = []
        if isinstance(el, Filter):
            filters.append(el.expr)
        elif isinstance(el, Optional_):
            inner, inner_filters = _eval_group(g, el.group, [{}])
            solutions = _left_join(solutions, inner, inner_filters)
    if pending:
        solutions = join_bgp(g, pending, solutions)
    return solutions, filters


def _conjuncts(e: Expr) -> List[Expr]:
    if isinstance(e, And):
        return _conjuncts(e.left) + _conjuncts(e.right)
    return [e]


def _pushdown_seed(group: Group) -> Binding:
    """Bindings implied by top-level ``?v = constant`` filters.

    Only variables occurring in a mandatory pattern of the group qualify, and
    only non-numeric constants, for which ``=`` is plain term equality.
    """
    mandatory = {t.name for tp in group.patterns for t in tp if t.__class__ is Variable}
    seed: Binding = {}
    for el in group.elements:
        if not isinstance(el, Filter):
            continue
        for c in _conjuncts(el.expr):
            if not (isinstance(c, Compare) and c.op == "=" and isinstance(c.left, TermExpr) and isinstance(c.right, TermExpr)):
                continue
            for var, const in ((c.left.term, c.right.term), (c.right.term, c.left.term)):
                if (
                    var.__class__ is Variable
                    and var.name in mandatory
                    and const.__class__ in (Iri, Literal)
                    and not (const.__class__ is Literal and const.is_numeric)
                ):
                    if seed.get(var.name, const) != const:
                        return {}
                    seed[var.name] = const
    return seed


def solve(g: Graph, group: Group) -> List[Binding]:
    """All solutions of a WHERE group."""
    solutions, filters = _eval_group(g, group, [_pushdown_seed(group)])
    if filters:
        solutions = [b for b in solutions if all(passes(f, b) for f in filters)]
    return solutions


# -- query forms --------------------------------------------------------------


def _instantiate(tp: TriplePattern, b: Binding):
    out = []
    for t in tp:
        if t.__class__ is Variable:
            t = b.get(t.name)
            if t is None:
                return None
        out.append(t)
    s, p, o = out
    if s.__class__ not in (Iri, BlankNode) or p.__class__ is not Iri:
        return None
    return (s, p, o)


def eval_construct(q: ConstructQuery, g: Graph) -> Graph:
    """Instantiate the template once per solution, skipping partially bound triples."""
    triples = set()
    for b in solve(g, q.where):
        for tp in q.template:
            t = _instantiate(tp, b)
            if t is not None:
                triples.add(t)
    out = Graph.trusted(triples, prefixes=q.prefixes)
    return out


def _order_key(t: Optional[Term]):
    if t is None:
        return (0,)
    if t.__class__ is BlankNode:
        return (1, t.label)
    if t.__class__ is Iri:
        return (2, t.value)
    if t.is_numeric:
        n = numeric_value(t)
        if n is not None:
            return (3, 0, float(n) if isinstance(n, float) else n, t.lexical)
    return (3, 1, t.datatype, t.language or "", t.lexical)


def _row_string(row: Row) -> Tuple[str, ...]:
    return tuple("" if t is None else t.n3() for t in row)


class RowSet:
    """Ordered SELECT result: column names plus rows of optional terms."""

    def __init__(self, columns: Sequence[str], rows: List[Row]):
        self.columns = list(columns)
        self.rows = rows

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    def __repr__(self):
        return f"RowSet({self.columns}, {len(self.rows)} rows)"


def eval_select(q: SelectQuery, g: Graph) -> RowSet:
    """Project solutions; rows are sorted by ORDER BY keys, ties by canonical row text."""
    keyed = []
    for b in solve(g, q.where):
        row = tuple(b.get(v) for v in q.projection)
        keyed.append((tuple(_order_key(b.get(v)) for v in q.order_by), _row_string(row), row))
    keyed.sort(key=lambda k: (k[0], k[1]))
    rows = [k[2] for k in keyed]
    if q.distinct:
        rows = list(dict.fromkeys(rows))
    return RowSet(q.projection, rows)
