"""Entity production: resolve an entity path, gather inputs, run the generator or converter."""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple
from urllib.parse import parse_qsl, urlencode, urlsplit

import httpx

from sdv.mapping import load_source
from sdv.query import ConstructQuery, TemplateError, eval_construct, eval_select, parse_query
from sdv.query.sparql import QueryError
from sdv.rdf import Graph, Iri, SyntaxErrorAt, parse_turtle
from sdv.rules import FixpointError, Proof, RuleEvaluationError, apply_rules
from sdv.service.config import (
    CONVERTED,
    ENTITY_PREFIX,
    SOURCE,
    EntityConfig,
    ServiceConfig,
    load_entities,
)

log = logging.getLogger(__name__)

PROVENANCE_HEADER = "X-SDV-Provenance"


class EntityError(Exception):
    status = 500

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.message = message
        self.detail = detail


class UnknownEntity(EntityError):
    status = 404


class BadRequest(EntityError):
    status = 400


class FetchError(EntityError):
    status = 502


class ConversionError(EntityError):
    status = 500


class DisabledEntity(EntityError):
    status = 500


@dataclass
class Result:
    graph: Graph
    proof: Optional[Proof] = None
    provenance: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class Snapshot:
    """Immutable mapped source graph; swapped atomically on reload."""

    graph: Graph


def _select_as_graph(q, g: Graph) -> Graph:
    # a SELECT filter keeps the triples whose subject is a selected resource
    rows = eval_select(q, g)
    keep = {t for r in rows for t in r if isinstance(t, Iri)}
    return Graph.trusted({t for t in g if t[0] in keep}, prefixes=g.prefixes)


class EntityService:
    """Stateless request handling over a source snapshot and a set of entity configs."""

    def __init__(
        self,
        config: ServiceConfig,
        source: Optional[Graph] = None,
        http_client: Optional[httpx.Client] = None,
    ):
        self.config = config
        self.entities, self.errors = load_entities(config.entities_root)
        self._snapshot = Snapshot(source if source is not None else self._load_source())
        self._client = http_client
        self._lock = threading.Lock()

    # -- lifecycle ---------------------------------------------------------

    def _load_source(self) -> Graph:
        cfg = self.config
        if cfg.source_manifest is None:
            return Graph()
        data = load_source(cfg.source_manifest, cfg.source_data)
        if cfg.default_tz is not None:
            for t in data.schema.tables.values():
                t.default_tz = cfg.default_tz
        return data.graph()

    def reload(self) -> None:
        """Re-read the source data and swap the snapshot in one assignment."""
        self._snapshot = Snapshot(self._load_source())

    @property
    def source_graph(self) -> Graph:
        return self._snapshot.graph

    def client(self) -> httpx.Client:
        with self._lock:
            if self._client is None:
                self._client = httpx.Client(timeout=self.config.fetch_timeout)
            return self._client

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    # -- resolution --------------------------------------------------------

    def resolve(self, path: str) -> EntityConfig:
        path = path.strip("/")
        if path in self.errors:
            raise DisabledEntity(f"entity {path!r} is disabled: {self.errors[path]}", entity=path)
        cfg = self.entities.get(path)
        if cfg is None:
            raise UnknownEntity(f"unknown entity {path!r}", entity=path)
        return cfg

    def check_params(self, cfg: EntityConfig, params: Mapping[str, str]) -> Dict[str, str]:
        missing = [n for n in cfg.required if not params.get(n)]
        if missing:
            raise BadRequest(f"missing required parameter(s): {', '.join(missing)}", entity=cfg.path)
        unknown = sorted(set(params) - set(cfg.params))
        if unknown:
            raise BadRequest(f"undeclared parameter(s): {', '.join(unknown)}", entity=cfg.path)
        # an empty optional value means "not supplied"
        return {k: v for k, v in params.items() if v != ""}

    def entity_url(self, path: str, params: Mapping[str, str]) -> str:
        q = urlencode(sorted(params.items()))
        return f"{self.config.base_url}{ENTITY_PREFIX}{path}" + (f"?{q}" if q else "")

    # -- production --------------------------------------------------------

    def produce(
        self, path: str, params: Mapping[str, str], want_proof: bool = False, all_justifications: bool = False
    ) -> Result:
        cfg = self.resolve(path)
        params = self.check_params(cfg, dict(params))
        if cfg.kind == SOURCE:
            return Result(self._produce_source(cfg, params))
        return self._produce_converted(cfg, params, want_proof, all_justifications)

    def _produce_source(self, cfg: EntityConfig, params: Dict[str, str]) -> Graph:
        try:
            text = cfg.template.instantiate(params)
            q = parse_query(text)
        except (TemplateError, QueryError, SyntaxErrorAt) as e:
            raise BadRequest(f"cannot build the query of {cfg.path}: {e}", entity=cfg.path) from None
        if not isinstance(q, ConstructQuery):
            raise ConversionError(f"query of {cfg.path} is not a CONSTRUCT", entity=cfg.path)
        return eval_construct(q, self.source_graph)

    def fetch(self, url: str) -> Tuple[Graph, List[str]]:
        """Graph behind ``url`` plus the URLs it transitively fetched."""
        base = self.config.base_url
        if self.config.fetch == "inprocess" and url.startswith(base + ENTITY_PREFIX):
            parts = urlsplit(url[len(base) :])
            path = parts.path[len(ENTITY_PREFIX) :]
            try:
                r = self.produce(path, dict(parse_qsl(parts.query, keep_blank_values=True)))
            except EntityError as e:
                raise FetchError(f"input {url} failed: {e.message}", url=url, status=e.status) from None
            return r.graph, r.provenance
        try:
            resp = self.client().get(url, headers={"Accept": "text/turtle"})
        except httpx.HTTPError as e:
            raise FetchError(f"input {url} could not be fetched: {e}", url=url) from None
        if resp.status_code != 200:
            raise FetchError(f"input {url} returned HTTP {resp.status_code}", url=url, status=resp.status_code)
        try:
            g = parse_turtle(resp.text, base=url)
        except ValueError as e:
            raise FetchError(f"input {url} is not valid Turtle: {e}", url=url) from None
        nested = resp.headers.get(PROVENANCE_HEADER, "")
        return g, nested.split() if nested else []

    def _gather(self, cfg: EntityConfig, params: Dict[str, str]) -> Tuple[List[Graph], List[str], List[str]]:
        graphs, sources, provenance = [], [], []
        for spec in cfg.inputs:
            if spec.static:
                graphs.append(cfg.static_graphs[spec.template])
                sources.append(f"file:{spec.template}")
                continue
            url = spec.expand(params)
            if not urlsplit(url).scheme:
                url = self.config.base_url + url
            g, nested = self.fetch(url)
            graphs.append(g)
            sources.append(url)
            provenance.append(url)
            provenance.extend(nested)
        return graphs, sources, provenance

    def _produce_converted(
        self, cfg: EntityConfig, params: Dict[str, str], want_proof: bool, all_justifications: bool = False
    ) -> Result:
        graphs, sources, provenance = self._gather(cfg, params)
        try:
            conv = apply_rules(
                graphs,
                cfg.rules,
                mode=cfg.mode,
                want_proof=want_proof,
                sources=sources,
                all_justifications=all_justifications,
            )
        except RuleEvaluationError as e:
            raise ConversionError(str(e), entity=cfg.path, rule=e.rule_id) from None
        except FixpointError as e:
            raise ConversionError(str(e), entity=cfg.path) from None
        g = conv.graph
        if cfg.output_filter is not None:
            if isinstance(cfg.output_filter, ConstructQuery):
                g = eval_construct(cfg.output_filter, g)
            else:
                g = _select_as_graph(cfg.output_filter, g)
        return Result(g, conv.proof, provenance, conv.warnings)

    def inputs(self, path: str, params: Mapping[str, str]) -> Tuple[List[Graph], List[str]]:
        """The input graphs of a converted entity with their source ids (as a proof names them)."""
        cfg = self.resolve(path)
        params = self.check_params(cfg, dict(params))
        if cfg.kind != CONVERTED:
            raise BadRequest(f"{path} is a source entity and has no inputs", entity=path)
        graphs, sources, _ = self._gather(cfg, params)
        return graphs, sources

    def produce_partitioned(
        self,
        path: str,
        params: Mapping[str, str],
        values: Sequence[str],
        key: Optional[str] = None,
        max_workers: int = 12,
    ) -> Graph:
        """One request per partition value, run concurrently; returns the union."""
        cfg = self.resolve(path)
        key = key or cfg.partition
        if key is None or key not in cfg.params:
            raise BadRequest(f"entity {path!r} declares no partition parameter {key!r}", entity=path)
        if not values:
            raise BadRequest("a partition needs at least one value", entity=path)

        def one(v: str) -> Graph:
            return self.produce(path, {**params, key: v}).graph

        with ThreadPoolExecutor(max_workers=min(max_workers, len(values))) as pool:
            parts = list(pool.map(one, values))
        return parts[0].union(*parts[1:])

    def describe(self, path: str) -> dict:
        cfg = self.resolve(path)
        return {
            "path": cfg.path,
            "kind": cfg.kind,
            "description": cfg.description,
            "required": cfg.required,
            "optional": cfg.optional,
            "inputs": [("file:" if s.static else "") + s.template for s in cfg.inputs],
            "rules": cfg.rule_files,
            "filter": cfg.filter_file,
            "mode": cfg.mode if cfg.kind == CONVERTED else None,
            "partition": cfg.partition,
        }
