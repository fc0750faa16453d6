"""Lightweight ETL: project application entities to rows and load them into CSV tables.

Target spec manifest (INI, same family as the schema manifest)::

    [table]
    name = PERSON
    key = person_id
    columns =
        person_id:integer
        year_of_birth:integer
    query = person.rq
    key_rule = last-segment

``query`` is a SELECT whose projection order matches ``columns``. The
key rule maps an IRI in the key position to its last path segment
(``last-segment``) or keeps it whole (``iri``).
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import re
import threading
from dataclasses import asdict, dataclass, field
from datetime import date
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from sdv.query import RowSet, SelectQuery, eval_select, parse_query
from sdv.rdf import BlankNode, Graph, Iri, Literal, Term

log = logging.getLogger(__name__)

COLUMN_TYPES = ("integer", "decimal", "string", "date", "dateTime", "boolean")
KEY_RULES = ("last-segment", "iri")
SKIP, REPLACE = "skip", "replace"


class EtlError(ValueError):
    pass


@dataclass(frozen=True)
class TargetColumn:
    name: str
    datatype: str


@dataclass
class TargetTableSpec:
    name: str
    columns: List[TargetColumn]
    key: str
    query: SelectQuery
    key_rule: str = "last-segment"

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if self.key not in names:
            raise EtlError(f"key column {self.key!r} is not a column of {self.name}")
        if len(set(names)) != len(names):
            raise EtlError(f"duplicate column in {self.name}")
        if len(self.query.projection) != len(self.columns):
            raise EtlError(
                f"query projects {len(self.query.projection)} variables, table {self.name} has {len(self.columns)} columns"
            )
        if self.key_rule not in KEY_RULES:
            raise EtlError(f"unknown key rule {self.key_rule!r}")

    @property
    def column_names(self) -> List[str]:
        return [c.name for c in self.columns]

    @property
    def key_index(self) -> int:
        return self.column_names.index(self.key)


def load_target_spec(path) -> TargetTableSpec:
    """Read a target spec manifest; the query path is relative to the manifest."""
    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(path.read_text(encoding="utf-8"))
    if not cp.has_section("table"):
        raise EtlError(f"{path}: missing [table] section")
    sec = cp["table"]
    columns = []
    for entry in re.split(r"[\n,]", sec.get("columns", "")):
        entry = entry.strip()
        if not entry:
            continue
        name, _, dtype = entry.partition(":")
        dtype = dtype or "string"
        if dtype not in COLUMN_TYPES:
            raise EtlError(f"{path}: unknown column type {dtype!r}")
        columns.append(TargetColumn(name.strip(), dtype))
    query = parse_query((path.parent / sec["query"]).read_text(encoding="utf-8"))
    if not isinstance(query, SelectQuery):
        raise EtlError(f"{path}: the projection query must be a SELECT")
    return TargetTableSpec(sec["name"], columns, sec["key"], query, sec.get("key_rule", "last-segment"))


# -- projection -----------------------------------------------------------------

_INT = re.compile(r"^[+-]?\d+$")


def _canonical(t: Term, dtype: str) -> str:
    """Target lexical form; values that do not fit are passed through for load to reject."""
    text = t.lexical if isinstance(t, Literal) else t.n3()
    if dtype == "integer" and _INT.match(text.strip()):
        return str(int(text))
    if dtype == "decimal":
        try:
            d = Decimal(text)
        except InvalidOperation:
            return text
        out = format(d.normalize(), "f")
        return out if out != "-0" else "0"
    if dtype == "date" and re.match(r"^\d{4}-\d{2}-\d{2}", text):
        return text[:10]
    if dtype == "boolean" and text in ("1", "0"):
        return "true" if text == "1" else "false"
    return text


def _key_value(t: Term, rule: str) -> str:
    if isinstance(t, Iri):
        if rule == "iri":
            return t.value
        return re.split(r"[/#]", t.value.rstrip("/#"))[-1]
    if isinstance(t, BlankNode):
        raise EtlError("a blank node cannot be a row key")
    return t.lexical


def project(g: Graph, spec: TargetTableSpec) -> RowSet:
    """SELECT over ``g``, rendered as strings in the target columns' lexical forms."""
    result = eval_select(spec.query, g)
    k = spec.key_index
    rows = []
    for r in result:
        if r[k] is None:
            raise EtlError(f"null key in projection for {spec.name}")
        out = []
        for i, (term, col) in enumerate(zip(r, spec.columns)):
            if term is None:
                out.append(None)
            elif i == k:
                out.append(_canonical(Literal(_key_value(term, spec.key_rule)), col.datatype))
            else:
                out.append(_canonical(term, col.datatype))
        rows.append(tuple(out))
    return RowSet(spec.column_names, rows)


# -- loading --------------------------------------------------------------------


def _valid(value: Optional[str], dtype: str) -> bool:
    if value is None or value == "":
        return True
    if dtype == "integer":
        return bool(_INT.match(value))
    if dtype == "decimal":
        return bool(re.match(r"^[+-]?(\d+(\.\d*)?|\.\d+)$", value))
    if dtype == "date":
        try:
            date.fromisoformat(value)
        except ValueError:
            return False
        return True
    if dtype == "dateTime":
        return bool(re.match(r"^-?\d{4,}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})?$", value))
    if dtype == "boolean":
        return value in ("true", "false")
    return True


@dataclass
class Rejection:
    row: int
    reason: str


@dataclass
class LoadReport:
    table: str
    inserted: int = 0
    skipped_duplicate: int = 0
    rejected: int = 0
    replaced: int = 0
    rejections: List[Rejection] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.inserted + self.skipped_duplicate + self.rejected

    def to_json(self) -> dict:
        return asdict(self)


_locks: Dict[Path, threading.Lock] = {}
_locks_guard = threading.Lock()


def _table_lock(path: Path) -> threading.Lock:
    with _locks_guard:
        return _locks.setdefault(path.resolve(), threading.Lock())


def table_path(spec: TargetTableSpec, target_dir) -> Path:
    return Path(target_dir) / f"{spec.name.lower()}.csv"


def _read_table(path: Path, spec: TargetTableSpec) -> List[List[str]]:
    if not path.exists():
        return []
    with path.open(newline="", encoding="utf-8") as f:
        records = list(csv.reader(f))
    if not records:
        return []
    if records[0] != spec.column_names:
        raise EtlError(f"{path}: header {records[0]} does not match {spec.column_names}")
    return records[1:]


def write_csv(columns: Sequence[str], rows: Sequence[Sequence[Optional[str]]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if v is None else v for v in r])
    return buf.getvalue()


def load(rows, spec: TargetTableSpec, target_dir, policy: str = SKIP) -> LoadReport:
    """Append ``rows`` to the spec's CSV table under ``target_dir``.

    Rows whose key already exists are skipped and counted (or replace the
    stored row with ``policy="replace"``); rows violating a column datatype
    or lacking a key are rejected. Also writes a JSON summary and appends to
    a line log next to the table.
    """
    if policy not in (SKIP, REPLACE):
        raise ValueError(f"unknown duplicate-key policy {policy!r}")
    target_dir = Path(target_dir)
    target_dir.mkdir(parents=True, exist_ok=True)
    path = table_path(spec, target_dir)
    report = LoadReport(spec.name)
    k = spec.key_index
    with _table_lock(path):
        stored = _read_table(path, spec)
        position = {r[k]: i for i, r in enumerate(stored)}
        for n, row in enumerate(rows):
            row = list(row)
            reason = None
            if len(row) != len(spec.columns):
                reason = f"expected {len(spec.columns)} values, got {len(row)}"
            elif row[k] in (None, ""):
                reason = "null key"
            else:
                for value, col in zip(row, spec.columns):
                    if not _valid(value, col.datatype):
                        reason = f"{col.name}: {value!r} is not a valid {col.datatype}"
                        break
            if reason is not None:
                report.rejected += 1
                report.rejections.append(Rejection(n, reason))
                log.warning("%s row %d rejected: %s", spec.name, n, reason)
                continue
            cells = ["" if v is None else v for v in row]
            key = cells[k]
            if key in position:
                if policy == REPLACE:
                    stored[position[key]] = cells
                    report.inserted += 1
                    report.replaced += 1
                else:
                    report.skipped_duplicate += 1
                continue
            position[key] = len(stored)
            stored.append(cells)
            report.inserted += 1
        path.write_text(write_csv(spec.column_names, stored), encoding="utf-8", newline="")
    summary = target_dir / f"{spec.name.lower()}.load.json"
    summary.write_text(json.dumps(report.to_json(), indent=1) + "\n", encoding="utf-8")
    with (target_dir / f"{spec.name.lower()}.load.log").open("a", encoding="utf-8") as f:
        f.write(
            f"table={spec.name} inserted={report.inserted} skipped_duplicate={report.skipped_duplicate} "
            f"rejected={report.rejected} replaced={report.replaced}\n"
        )
        for r in report.rejections:
            f.write(f"  rejected row {r.row}: {r.reason}\n")
    return report


def project_and_load(g: Graph, spec: TargetTableSpec, target_dir, policy: str = SKIP) -> Tuple[RowSet, LoadReport]:
    rows = project(g, spec)
    return rows, load(rows, spec, target_dir, policy)
