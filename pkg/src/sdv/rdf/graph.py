"""In-memory triple set with lazily built SPO/POS/OSP indexes."""

from __future__ import annotations

from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from sdv.rdf.terms import BlankNode, Iri, Term, TermError, Variable

Triple = Tuple[Term, Term, Term]
TriplePattern = Tuple[Term, Term, Term]
Binding = Dict[str, Term]


def check_triple(t: Triple) -> None:
    s, p, o = t
    if s.__class__ not in (Iri, BlankNode):
        raise TermError(f"subject must be an IRI or blank node: {s!r}")
    if p.__class__ is not Iri:
        raise TermError(f"predicate must be an IRI: {p!r}")
    if o.__class__ is Variable:
        raise TermError(f"variables cannot be asserted: {o!r}")


class Graph:
    """A set of triples plus the prefix map and base it was read with.

    Build a graph with ``add``/``update`` and treat it as read-only once it
    is shared; the indexes are built on first lookup and dropped on mutation.
    """

    __slots__ = ("_triples", "prefixes", "base", "_spo", "_pos", "_osp", "_pcount", "_pso")

    def __init__(
        self,
        triples: Iterable[Triple] = (),
        prefixes: Optional[Mapping[str, str]] = None,
        base: Optional[str] = None,
    ):
        self._triples: Set[Triple] = set()
        self.prefixes: Dict[str, str] = dict(prefixes or {})
        self.base = base
        self._spo = self._pos = self._osp = self._pcount = self._pso = None
        self.update(triples)

    @classmethod
    def trusted(cls, triples: Set[Triple], prefixes=None) -> "Graph":
        """Wrap an already validated triple set without copying it."""
        g = cls(prefixes=prefixes)
        g._triples = triples
        return g

    def add(self, triple: Triple) -> None:
        check_triple(triple)
        self._triples.add(triple)
        self._spo = self._pos = self._osp = self._pcount = self._pso = None

    def update(self, triples: Iterable[Triple]) -> None:
        for t in triples:
            check_triple(t)
            self._triples.add(t)
        self._spo = self._pos = self._osp = self._pcount = self._pso = None

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, triple) -> bool:
        return triple in self._triples

    def __eq__(self, other) -> bool:
        # strict set equality; use isomorphic() when blank nodes are involved
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __repr__(self) -> str:
        return f"<Graph with {len(self)} triples>"

    @property
    def triples(self) -> Set[Triple]:
        return self._triples

    def union(self, *others: "Graph") -> "Graph":
        g = Graph(prefixes=self.prefixes)
        g._triples = set(self._triples)
        for o in others:
            g._triples |= o._triples
            for k, v in o.prefixes.items():
                g.prefixes.setdefault(k, v)
        return g

    def subjects(self) -> Set[Term]:
        return {t[0] for t in self._triples}

    # -- indexes -----------------------------------------------------------

    def _index(self, order: str):
        cached = getattr(self, "_" + order)
        if cached is not None:
            return cached
        return self._build(order)

    def _build(self, order: str):
        a, b, c = ("spo".index(ch) for ch in order)
        idx: dict = {}
        for t in self._triples:
            inner = idx.get(t[a])
            if inner is None:
                inner = idx[t[a]] = {}
            leaf = inner.get(t[b])
            if leaf is None:
                leaf = inner[t[b]] = set()
            leaf.add(t[c])
        setattr(self, "_" + order, idx)
        return idx

    def _by_subject(self, p) -> Dict[Term, Set[Term]]:
        # subject -> objects for one predicate, built from that predicate's slice
        # of POS so a bound-subject lookup does not need the full SPO index
        if self._pso is None:
            self._pso = {}
        idx = self._pso.get(p)
        if idx is None:
            idx = self._pso[p] = {}
            for obj, subjs in (self._pos or self._build("pos")).get(p, {}).items():
                for subj in subjs:
                    objs = idx.get(subj)
                    if objs is None:
                        objs = idx[subj] = set()
                    objs.add(obj)
        return idx

    def triples_matching(self, s=None, p=None, o=None) -> Iterator[Triple]:
        """Triples with the given fixed positions; None is a wildcard."""
        if s is not None and p is not None:
            objs = self._by_subject(p).get(s)
            if not objs:
                return
            if o is not None:
                if o in objs:
                    yield (s, p, o)
                return
            for obj in objs:
                yield (s, p, obj)
            return
        if s is not None:
            if o is not None:
                for pred in self._index("osp").get(o, {}).get(s, ()):
                    yield (s, pred, o)
                return
            by_p = (self._spo or self._build("spo")).get(s)
            if not by_p:
                return
            for pred, objs in by_p.items():
                for obj in objs:
                    yield (s, pred, obj)
            return
        if p is not None:
            by_o = (self._pos or self._build("pos")).get(p)
            if not by_o:
                return
            if o is not None:
                for subj in by_o.get(o, ()):
                    yield (subj, p, o)
                return
            for obj, subjs in by_o.items():
                for subj in subjs:
                    yield (subj, p, obj)
            return
        if o is not None:
            for subj, preds in self._index("osp").get(o, {}).items():
                for pred in preds:
                    yield (subj, pred, o)
            return
        yield from self._triples

    def count_matching(self, s=None, p=None, o=None) -> int:
        """Cheap upper bound on the number of matches, for join ordering."""
        if s is None and p is None and o is None:
            return len(self._triples)
        if s is not None and p is not None:
            return len(self._by_subject(p).get(s, ()))
        if s is not None:
            by_p = (self._spo or self._build("spo")).get(s)
            if not by_p:
                return 0
            return sum(len(v) for v in by_p.values())
        if p is not None:
            by_o = (self._pos or self._build("pos")).get(p)
            if not by_o:
                return 0
            if o is not None:
                return len(by_o.get(o, ()))
            if self._pcount is None:
                self._pcount = {}
            n = self._pcount.get(p)
            if n is None:
                n = self._pcount[p] = sum(len(v) for v in by_o.values())
            return n
        return sum(len(v) for v in self._index("osp").get(o, {}).values())


def resolve(term: Term, binding: Mapping[str, Term]) -> Optional[Term]:
    """The concrete term for a pattern position, or None if it is a free variable."""
    if term.__class__ is Variable:
        return binding.get(term.name)
    return term


def match(g: Graph, pattern: TriplePattern, seed: Optional[Mapping[str, Term]] = None) -> Iterator[Binding]:
    """Yield every extension of ``seed`` that maps ``pattern`` onto a triple of ``g``."""
    seed = seed or {}
    s, p, o = (resolve(t, seed) for t in pattern)
    free = [
        (i, t.name) for i, t in enumerate(pattern) if t.__class__ is Variable and t.name not in seed
    ]
    if not free:
        if (s, p, o) in g:
            yield dict(seed)
        return
    for triple in g.triples_matching(s, p, o):
        ext = dict(seed)
        ok = True
        for i, name in free:
            prev = ext.get(name)
            if prev is None:
                ext[name] = triple[i]
            elif prev != triple[i]:
                ok = False
                break
        if ok:
            yield ext


def plan(
    patterns: Sequence[TriplePattern],
    bound: Iterable[str],
    estimate: Callable[[int], int],
) -> List[int]:
    """Greedy join order: fewest free positions first, then the smallest estimate.

    ``estimate(i)`` sizes pattern ``i`` from its constants alone; the order
    is fixed once per join instead of being re-costed for every binding.
    """
    bound = set(bound)
    remaining = list(range(len(patterns)))
    sizes: Dict[int, int] = {}
    order: List[int] = []
    while remaining:

        def key(i: int):
            free = sum(1 for t in patterns[i] if t.__class__ is Variable and t.name not in bound)
            if i not in sizes:
                sizes[i] = estimate(i)
            return (free, sizes[i], i)

        best = min(remaining, key=key)
        remaining.remove(best)
        order.append(best)
        bound.update(t.name for t in patterns[best] if t.__class__ is Variable)
    return order


def substitute(pattern: TriplePattern, binding: Mapping[str, Term]) -> Tuple[Optional[Term], ...]:
    """Instantiate a pattern; positions with unbound variables become None."""
    return tuple(resolve(t, binding) for t in pattern)
