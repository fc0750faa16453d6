"""Service and entity configuration.

An entities root holds one folder per entity; the folder path relative to
the root is the entity path. Each folder has a ``config`` file::

    [entity]
    kind = converted            ; or: source
    description = ...
    query = query.rq            ; source entities
    rules = rules.n3            ; converted entities, comma separated
    inputs = inputs.list
    filter = filter.rq          ; optional CONSTRUCT or SELECT over the derived graph
    mode = single-pass          ; or: fixpoint
    partition = period          ; optional parameter that may be split into sub-entities

    [params]
    patient_uri = optional      ; or: required

``inputs.list`` has one input per line: an entity URL template with
``{param}`` holes (relative to the service base URL, or absolute), or
``file:<path>`` naming a static Turtle graph. Blank lines and ``#``
comments are ignored.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple
from urllib.parse import parse_qsl, quote, urlsplit

from sdv.query import ConstructQuery, QueryTemplate, SelectQuery, TemplateError, parse_query
from sdv.rdf import Graph, parse_turtle
from sdv.rules import RuleSet, parse_rules
from sdv.rules.engine import MODES, SINGLE_PASS

SOURCE, CONVERTED = "source", "converted"
ENTITIES_ROOT_ENV = "SDV_ENTITIES_ROOT"
ENTITY_PREFIX = "/entities/"

_HOLE = re.compile(r"\{(\w+)\}")


class ConfigError(ValueError):
    def __init__(self, message: str, entity: Optional[str] = None):
        super().__init__(f"{entity}: {message}" if entity else message)
        self.entity = entity


@dataclass
class InputSpec:
    template: str  # URL template, or a file path for static inputs
    static: bool = False

    def holes(self) -> List[str]:
        return [] if self.static else _HOLE.findall(self.template)

    def entity_path(self) -> Optional[str]:
        """Entity path for inputs hosted by this service (relative URLs)."""
        if self.static or urlsplit(self.template).scheme:
            return None
        path = urlsplit(self.template).path
        if not path.startswith(ENTITY_PREFIX):
            return None
        return path[len(ENTITY_PREFIX) :].strip("/")

    def expand(self, params: Dict[str, str]) -> str:
        """Fill holes; query pairs whose value is a missing optional parameter are dropped."""
        if self.static:
            return self.template
        parts = urlsplit(self.template)
        pairs = []
        for k, v in parse_qsl(parts.query, keep_blank_values=True):
            names = _HOLE.findall(v)
            if any(n not in params for n in names):
                continue
            pairs.append(f"{k}={_HOLE.sub(lambda m: quote(params[m.group(1)], safe=''), v)}")
        path = _HOLE.sub(lambda m: quote(params[m.group(1)], safe=""), parts.path)
        url = path + ("?" + "&".join(pairs) if pairs else "")
        if parts.scheme:
            url = f"{parts.scheme}://{parts.netloc}{url}"
        return url


@dataclass
class EntityConfig:
    path: str
    kind: str
    folder: Path
    params: Dict[str, bool]  # name -> required
    description: str = ""
    template: Optional[QueryTemplate] = None
    rule_files: List[str] = field(default_factory=list)
    rules: Optional[RuleSet] = None
    inputs: List[InputSpec] = field(default_factory=list)
    output_filter: Optional[object] = None
    filter_file: Optional[str] = None
    mode: str = SINGLE_PASS
    partition: Optional[str] = None
    static_graphs: Dict[str, Graph] = field(default_factory=dict)

    @property
    def required(self) -> List[str]:
        return sorted(n for n, req in self.params.items() if req)

    @property
    def optional(self) -> List[str]:
        return sorted(n for n, req in self.params.items() if not req)


def _split(value: str) -> List[str]:
    return [v.strip() for v in re.split(r"[,\n]", value) if v.strip()]


def read_inputs(text: str) -> List[InputSpec]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("file:"):
            out.append(InputSpec(line[len("file:") :].strip(), static=True))
        else:
            out.append(InputSpec(line))
    return out


def load_entity(root: Path, folder: Path) -> EntityConfig:
    """Load and validate one entity folder; raises ConfigError naming the entity."""
    path = folder.relative_to(root).as_posix()
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        cp.read_string((folder / "config").read_text(encoding="utf-8"))
    except (configparser.Error, OSError) as e:
        raise ConfigError(f"unreadable config: {e}", path) from None
    if not cp.has_section("entity"):
        raise ConfigError("config lacks an [entity] section", path)
    sec = cp["entity"]
    kind = sec.get("kind", "").strip()
    params: Dict[str, bool] = {}
    if cp.has_section("params"):
        for name, flag in cp["params"].items():
            flag = flag.strip().lower()
            if flag not in ("required", "optional"):
                raise ConfigError(f"parameter {name!r} must be 'required' or 'optional'", path)
            params[name] = flag == "required"
    cfg = EntityConfig(path, kind, folder, params, description=sec.get("description", "").strip())

    def read(name: str) -> str:
        p = folder / name
        if not p.is_file():
            raise ConfigError(f"missing file {name}", path)
        return p.read_text(encoding="utf-8")

    try:
        if kind == SOURCE:
            cfg.template = QueryTemplate(read(sec.get("query", "query.rq")))
            undeclared = cfg.template.parameters - set(params)
            if undeclared:
                raise ConfigError(f"query template uses undeclared parameters {sorted(undeclared)}", path)
        elif kind == CONVERTED:
            cfg.rule_files = _split(sec.get("rules", ""))
            if not cfg.rule_files:
                raise ConfigError("a converted entity needs at least one rule file", path)
            rules = None
            for rf in cfg.rule_files:
                rs = parse_rules(read(rf), source=rf)
                rules = rs if rules is None else rules + rs
            cfg.rules = rules
            cfg.inputs = read_inputs(read(sec.get("inputs", "inputs.list")))
            if not cfg.inputs:
                raise ConfigError("a converted entity needs at least one input", path)
            for spec in cfg.inputs:
                if spec.static:
                    cfg.static_graphs[spec.template] = parse_turtle(read(spec.template))
                    continue
                undeclared = set(spec.holes()) - set(params)
                if undeclared:
                    raise ConfigError(f"input {spec.template!r} uses undeclared parameters {sorted(undeclared)}", path)
                parts = urlsplit(spec.template)
                path_holes = set(_HOLE.findall(parts.path))
                optional_in_path = {h for h in path_holes if not params.get(h)}
                if optional_in_path:
                    raise ConfigError(f"input {spec.template!r} has optional parameters in its path", path)
            cfg.mode = sec.get("mode", SINGLE_PASS).strip()
            if cfg.mode not in MODES:
                raise ConfigError(f"unknown mode {cfg.mode!r}", path)
            if sec.get("filter"):
                cfg.filter_file = sec["filter"].strip()
                q = parse_query(read(cfg.filter_file))
                if not isinstance(q, (ConstructQuery, SelectQuery)):
                    raise ConfigError("filter must be a CONSTRUCT or SELECT query", path)
                cfg.output_filter = q
        else:
            raise ConfigError(f"kind must be 'source' or 'converted', got {kind!r}", path)
    except ConfigError:
        raise
    except (ValueError, TemplateError) as e:
        raise ConfigError(str(e), path) from None
    cfg.partition = sec.get("partition", "").strip() or None
    if cfg.partition and cfg.partition not in params:
        raise ConfigError(f"partition parameter {cfg.partition!r} is not declared", path)
    return cfg


def discover(root: Path) -> List[Path]:
    """Entity folders under ``root``: every directory holding a ``config`` file."""
    if not root.is_dir():
        return []
    return sorted(p.parent for p in root.rglob("config") if p.is_file())


def load_entities(root: Path) -> Tuple[Dict[str, EntityConfig], Dict[str, str]]:
    """All entities under ``root``; returns (valid configs, errors by entity path)."""
    configs: Dict[str, EntityConfig] = {}
    errors: Dict[str, str] = {}
    for folder in discover(root):
        try:
            cfg = load_entity(root, folder)
        except ConfigError as e:
            errors[folder.relative_to(root).as_posix()] = str(e)
            continue
        configs[cfg.path] = cfg
    # inputs that point at this service must name a known entity
    for path, cfg in list(configs.items()):
        for spec in cfg.inputs:
            target = spec.entity_path()
            if spec.static or urlsplit(spec.template).scheme:
                continue
            if target is None:
                errors[path] = f"{path}: input {spec.template!r} is not an /entities/ URL"
            elif target not in configs and target not in errors:
                errors[path] = f"{path}: input {spec.template!r} names unknown entity {target!r}"
        if path in errors:
            del configs[path]
    return configs, errors


@dataclass
class ServiceConfig:
    entities_root: Path
    source_manifest: Optional[Path] = None
    source_data: Optional[Path] = None
    targets: Optional[Path] = None
    base_url: str = "http://127.0.0.1:8000"
    fetch: str = "http"  # or "inprocess"
    default_tz: Optional[str] = None
    host: str = "127.0.0.1"
    port: int = 8000
    fetch_timeout: float = 30.0


def load_service_config(path) -> ServiceConfig:
    """Read ``service.ini``; relative paths resolve against its folder.

    The entities root may be overridden with the ``SDV_ENTITIES_ROOT``
    environment variable.
    """
    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(path.read_text(encoding="utf-8"))
    except (configparser.Error, OSError) as e:
        raise ConfigError(f"{path}: {e}") from None
    if not cp.has_section("service"):
        raise ConfigError(f"{path}: missing [service] section")
    sec = cp["service"]
    here = path.parent

    def rel(key: str) -> Optional[Path]:
        v = sec.get(key, "").strip()
        return (here / v).resolve() if v else None

    root = os.environ.get(ENTITIES_ROOT_ENV) or None
    cfg = ServiceConfig(
        entities_root=Path(root).resolve() if root else (rel("entities") or (here / "entities").resolve()),
        source_manifest=rel("source_manifest"),
        source_data=rel("source_data"),
        targets=rel("targets"),
        base_url=sec.get("base_url", "http://127.0.0.1:8000").rstrip("/"),
        fetch=sec.get("fetch", "http").strip(),
        default_tz=sec.get("default_tz", "").strip() or None,
        host=sec.get("host", "127.0.0.1"),
        port=sec.getint("port", 8000),
        fetch_timeout=sec.getfloat("fetch_timeout", 30.0),
    )
    if cfg.fetch not in ("http", "inprocess"):
        raise ConfigError(f"{path}: fetch must be 'http' or 'inprocess'")
    return cfg
