"""Parameterised query templates.

Markers: ``$name$`` is replaced by the raw parameter value, and
``$if(name)$ ... $endif$`` keeps its body only when ``name`` is supplied.
Guards may nest. Substitution is textual and happens before parsing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Mapping, Set, Union

_MARKER = re.compile(r"\$if\((\w+)\)\$|\$endif\$|\$(\w+)\$")


# characters that would let a value escape its IRI or string slot
_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_STRING_FORBIDDEN = re.compile(r'["\\\n\r]')


class TemplateError(ValueError):
    pass


@dataclass
class _Param:
    name: str
    position: str  # "iri", "string" or "raw"


@dataclass
class _Guard:
    name: str
    body: List["_Node"] = field(default_factory=list)


_Node = Union[str, _Param, _Guard]


def _parse(text: str) -> List[_Node]:
    root: List[_Node] = []
    stack: List[_Guard] = []
    out = root
    pos = 0
    for m in _MARKER.finditer(text):
        if m.start() > pos:
            out.append(text[pos : m.start()])
        if m.group(1):
            guard = _Guard(m.group(1))
            out.append(guard)
            stack.append(guard)
            out = guard.body
        elif m.group(2):
            before = text[m.start() - 1 : m.start()]
            out.append(_Param(m.group(2), {"<": "iri", '"': "string"}.get(before, "raw")))
        else:
            if not stack:
                raise TemplateError(f"$endif$ without matching $if$ at offset {m.start()}")
            stack.pop()
            out = stack[-1].body if stack else root
        pos = m.end()
    if stack:
        raise TemplateError(f"unclosed $if({stack[-1].name})$")
    if pos < len(text):
        out.append(text[pos:])
    return root


def _names(nodes: List[_Node], acc: Set[str]) -> Set[str]:
    for n in nodes:
        if isinstance(n, _Param):
            acc.add(n.name)
        elif isinstance(n, _Guard):
            acc.add(n.name)
            _names(n.body, acc)
    return acc


class QueryTemplate:
    def __init__(self, text: str):
        self.text = text
        self._nodes = _parse(text)
        self.parameters = frozenset(_names(self._nodes, set()))

    def __repr__(self):
        return f"QueryTemplate(parameters={sorted(self.parameters)})"

    def instantiate(self, params: Mapping[str, str]) -> str:
        return instantiate(self, params)


def instantiate(t: QueryTemplate, params: Mapping[str, str]) -> str:
    """Expand guards and substitute parameters into query text."""
    out: List[str] = []

    def walk(nodes: List[_Node]):
        for n in nodes:
            if isinstance(n, str):
                out.append(n)
            elif isinstance(n, _Guard):
                if n.name in params:
                    walk(n.body)
            else:
                if n.name not in params:
                    raise TemplateError(f"unresolved parameter ${n.name}$")
                value = str(params[n.name])
                if n.position == "iri" and _IRI_FORBIDDEN.search(value):
                    raise TemplateError(f"parameter {n.name!r} is not usable as an IRI: {value!r}")
                if n.position == "string" and _STRING_FORBIDDEN.search(value):
                    raise TemplateError(f"parameter {n.name!r} is not usable inside a string: {value!r}")
                out.append(value)

    walk(t._nodes)
    return "".join(out)
