"""Canonical blank-node labelling, canonical N-Triples, graph hashes, isomorphism.

Blank nodes are coloured by iterative refinement over their neighbourhoods.
Remaining ties are broken by individualising each member of the first tied
cell and keeping the lexicographically smallest result, so the labelling is
exact but exponential for highly symmetric blank-node structures.
"""

from __future__ import annotations

import hashlib
from typing import Dict, Iterable, List, Set, Tuple

from sdv.rdf.graph import Graph, Triple
from sdv.rdf.terms import BlankNode, Term


def _digest(*parts: str) -> str:
    return hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()[:32]


def _refine(triples: List[Triple], bnodes: Set[BlankNode], colors: Dict[BlankNode, str]) -> Dict[BlankNode, str]:
    def label(term: Term) -> str:
        if term.__class__ is BlankNode:
            return "_:" + colors[term]
        return term.n3()

    while True:
        sig: Dict[BlankNode, List[str]] = {b: [] for b in bnodes}
        for s, p, o in triples:
            if s.__class__ is BlankNode:
                sig[s].append("+" + p.n3() + " " + label(o))
            if o.__class__ is BlankNode:
                sig[o].append("-" + p.n3() + " " + label(s))
        new = {b: _digest(colors[b], *sorted(sig[b])) for b in bnodes}
        if len(set(new.values())) == len(set(colors.values())):
            return new
        colors = new


def _render(triples: List[Triple], names: Dict[BlankNode, str]) -> List[str]:
    def r(term: Term) -> str:
        if term.__class__ is BlankNode:
            return "_:" + names[term]
        return term.n3()

    return sorted(f"{r(s)} {r(p)} {r(o)} ." for s, p, o in triples)


def _search(triples: List[Triple], bnodes: Set[BlankNode], colors: Dict[BlankNode, str]) -> Tuple[List[str], Dict[BlankNode, str]]:
    colors = _refine(triples, bnodes, colors)
    cells: Dict[str, List[BlankNode]] = {}
    for b, c in colors.items():
        cells.setdefault(c, []).append(b)
    tied = sorted(c for c, members in cells.items() if len(members) > 1)
    if not tied:
        order = sorted(bnodes, key=lambda b: colors[b])
        names = {b: f"c{i}" for i, b in enumerate(order)}
        return _render(triples, names), names
    best = None
    for b in cells[tied[0]]:
        trial = dict(colors)
        trial[b] = _digest(colors[b], "individualised")
        result = _search(triples, bnodes, trial)
        if best is None or result[0] < best[0]:
            best = result
    return best


def _bnodes(triples: List[Triple]) -> Set[BlankNode]:
    return {t for tr in triples for t in (tr[0], tr[2]) if t.__class__ is BlankNode}


def canonical_lines(triples: Iterable[Triple]) -> List[str]:
    """Sorted N-Triples lines with blank nodes relabelled canonically."""
    triples = list(triples)
    bnodes = _bnodes(triples)
    if not bnodes:
        return sorted(f"{s.n3()} {p.n3()} {o.n3()} ." for s, p, o in triples)
    return _search(triples, bnodes, {b: "" for b in bnodes})[0]


def canonical_ntriples(g: Graph) -> str:
    lines = canonical_lines(g)
    return "".join(line + "\n" for line in lines)


def graph_hash(g: Graph) -> str:
    """Hex SHA-256 digest of the canonical N-Triples form."""
    return hashlib.sha256(canonical_ntriples(g).encode("utf-8")).hexdigest()


def canonical_relabel(g: Graph) -> Dict[BlankNode, BlankNode]:
    """Map each blank node of ``g`` to its canonical label (c0, c1, ...)."""
    triples = list(g)
    bnodes = _bnodes(triples)
    if not bnodes:
        return {}
    names = _search(triples, bnodes, {b: "" for b in bnodes})[1]
    return {b: BlankNode(name) for b, name in names.items()}


def isomorphic(a: Graph, b: Graph) -> bool:
    if len(a) != len(b):
        return False
    return canonical_lines(a) == canonical_lines(b)
