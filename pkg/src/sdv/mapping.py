"""Direct mapping of tabular sources (CSV + schema manifest) to RDF.

Tables become ``rdfs:Class`` resources, columns become ``rdf:Property``
resources whose range is the column's XSD datatype, or the referenced
table's class for foreign-key columns. Rows become resources typed with
their table class.

Manifest format (INI)::

    [mapping]
    resource_base = http://example.org/resource
    onto_base = http://www.agfa.com/orbis-schema
    default_tz = +01:00

    [NATPERSON]
    pk = id
    columns =
        id:integer
        vorname:string:nullable
        name:string
        gebdat:dateTime
    csv = natperson.csv

Column entries are ``name:type[:nullable][:fk=TABLE.col]``, separated by
newlines or commas. Per-table keys may override ``resource_base``,
``onto_base``, ``default_tz`` and ``expose_pk``, and may set
``resource_template`` (placeholders ``{base}``, ``{Table}``, ``{pk}``),
``csv`` (data file, default ``<table>.csv`` in lower case) and ``table``
(name override).
"""

from __future__ import annotations

import configparser
import csv
import io
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple
from urllib.parse import quote

from sdv.rdf import RDF, RDF_TYPE, RDFS, XSD, Graph, Iri, Literal
from sdv.rdf.terms import XSD_BOOLEAN, XSD_DATE, XSD_DATETIME, XSD_DECIMAL, XSD_INTEGER, XSD_STRING

DATATYPES = {
    "integer": XSD_INTEGER,
    "decimal": XSD_DECIMAL,
    "string": XSD_STRING,
    "dateTime": XSD_DATETIME,
    "date": XSD_DATE,
    "boolean": XSD_BOOLEAN,
}

_TZ = re.compile(r"^(Z|[+-]\d{2}:\d{2})?$")


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    datatype: str
    nullable: bool = False
    foreign_key: Optional[Tuple[str, str]] = None


@dataclass
class TableSchema:
    name: str
    columns: List[Column]
    primary_key: str
    resource_base: str = "http://example.org/resource"
    onto_base: str = "http://example.org/ontology"
    default_tz: str = ""
    expose_pk: bool = False
    resource_template: str = "{base}/{Table}/{pk}"
    csv: Optional[str] = None

    @property
    def local_name(self) -> str:
        return self.name.capitalize()

    @property
    def namespace(self) -> str:
        return f"{self.onto_base}/{self.local_name}#"

    @property
    def class_iri(self) -> Iri:
        return Iri(self.namespace + "Class")

    def property_iri(self, column: str) -> Iri:
        return Iri(self.namespace + column)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise MappingError(f"table {self.name} has no column {name!r}")

    def resource_iri(self, pk_value) -> Iri:
        return Iri(
            self.resource_template.format(
                base=self.resource_base, Table=self.local_name, table=self.name, pk=quote(str(pk_value), safe="")
            )
        )


@dataclass
class TableSchemaSet:
    tables: Dict[str, TableSchema] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tables)

    def __getitem__(self, name: str) -> TableSchema:
        try:
            return self.tables[name]
        except KeyError:
            raise MappingError(f"unknown table {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.tables

    def validate(self) -> None:
        for t in self.tables.values():
            pk = t.column(t.primary_key)
            if pk.nullable:
                raise MappingError(f"primary key {t.name}.{pk.name} must not be nullable")
            names = [c.name for c in t.columns]
            if len(names) != len(set(names)):
                raise MappingError(f"duplicate column in table {t.name}")
            for c in t.columns:
                if c.foreign_key is None:
                    continue
                target, key = c.foreign_key
                if target not in self.tables:
                    raise MappingError(f"dangling foreign key {t.name}.{c.name} -> {target}.{key}")
                ttab = self.tables[target]
                ttab.column(key)
                if key != ttab.primary_key:
                    raise MappingError(f"foreign key {t.name}.{c.name} must reference the primary key of {target}")
            if not t.resource_iri("x").is_absolute:
                raise MappingError(f"resource template of {t.name} does not yield an absolute IRI")


@dataclass
class Row:
    table: str
    values: Dict[str, object]


def _parse_columns(spec: str, table: str) -> List[Column]:
    cols = []
    for entry in re.split(r"[,\n]", spec):
        entry = entry.strip()
        if not entry:
            continue
        parts = entry.split(":")
        if len(parts) < 2:
            raise MappingError(f"column entry {entry!r} in {table} needs name:type")
        name, dtype, *flags = parts
        if dtype not in DATATYPES:
            raise MappingError(f"unknown datatype {dtype!r} for {table}.{name}")
        nullable = False
        fk = None
        for flag in flags:
            if flag == "nullable":
                nullable = True
            elif flag.startswith("fk="):
                target, dot, key = flag[3:].partition(".")
                if not dot:
                    raise MappingError(f"foreign key {flag!r} must be fk=TABLE.column")
                fk = (target, key)
            else:
                raise MappingError(f"unknown column flag {flag!r} for {table}.{name}")
        cols.append(Column(name, dtype, nullable, fk))
    return cols


def load_schema(manifest: str) -> TableSchemaSet:
    """Parse a schema manifest into a validated TableSchemaSet."""
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(manifest)
    except configparser.DuplicateSectionError as e:
        raise MappingError(f"duplicate table {e.section!r}") from None
    except configparser.Error as e:
        raise MappingError(f"malformed manifest: {e}") from None
    defaults = dict(cp["mapping"]) if cp.has_section("mapping") else {}
    out = TableSchemaSet()
    for section in cp.sections():
        if section == "mapping":
            continue
        sec = {**defaults, **dict(cp[section])}
        name = sec.get("table", section)
        if name in out.tables:
            raise MappingError(f"duplicate table {name!r}")
        if "pk" not in sec or "columns" not in sec:
            raise MappingError(f"table {name} needs 'pk' and 'columns'")
        tz = sec.get("default_tz", "")
        if not _TZ.match(tz):
            raise MappingError(f"bad default_tz {tz!r}")
        schema = TableSchema(
            name=name,
            columns=_parse_columns(sec["columns"], name),
            primary_key=sec["pk"],
            default_tz=tz,
            expose_pk=sec.get("expose_pk", "false").lower() in ("1", "true", "yes"),
            csv=sec.get("csv"),
        )
        for key in ("resource_base", "onto_base", "resource_template"):
            if key in sec:
                setattr(schema, key, sec[key].rstrip("/") if key != "resource_template" else sec[key])
        out.tables[name] = schema
    out.validate()
    return out


def generate_ontology(s: TableSchemaSet) -> Graph:
    """Source ontology: one class per table, one property per column."""
    rdf_property = Iri(RDF + "Property")
    rdfs_class = Iri(RDFS + "Class")
    domain, rng = Iri(RDFS + "domain"), Iri(RDFS + "range")
    a = Iri(RDF_TYPE)
    g = Graph(prefixes={"rdf": RDF, "rdfs": RDFS, "xsd": XSD})
    for t in s.tables.values():
        g.prefixes[t.name.lower()] = t.namespace
        g.add((t.class_iri, a, rdfs_class))
        for c in t.columns:
            prop = t.property_iri(c.name)
            g.add((prop, a, rdf_property))
            g.add((prop, domain, t.class_iri))
            if c.foreign_key:
                g.add((prop, rng, s[c.foreign_key[0]].class_iri))
            else:
                g.add((prop, rng, Iri(DATATYPES[c.datatype])))
    return g


# -- values -----------------------------------------------------------------


def parse_value(raw: Optional[str], column: Column, table: str = ""):
    """Typed Python value for a CSV cell; empty cells are null."""
    if raw is None or raw == "":
        if not column.nullable:
            raise MappingError(f"null value in non-nullable column {table}.{column.name}")
        return None
    dt = column.datatype
    try:
        if dt == "integer":
            return int(raw)
        if dt == "decimal":
            return Decimal(raw)
        if dt == "boolean":
            low = raw.strip().lower()
            if low in ("true", "1"):
                return True
            if low in ("false", "0"):
                return False
            raise ValueError(raw)
        if dt == "date":
            return date.fromisoformat(raw.strip())
        if dt == "dateTime":
            text = raw.strip()
            if text.endswith("Z"):
                text = text[:-1] + "+00:00"
            return datetime.fromisoformat(text)
        return raw
    except (ValueError, InvalidOperation):
        raise MappingError(f"value {raw!r} is not a valid {dt} for {table}.{column.name}") from None


_PYTYPES = {
    "integer": (int,),
    "decimal": (Decimal, int),
    "string": (str,),
    "boolean": (bool,),
    "date": (date,),
    "dateTime": (datetime,),
}


def _conforms(value, dtype: str) -> bool:
    if dtype == "integer" and isinstance(value, bool):
        return False
    if dtype == "date" and isinstance(value, datetime):
        return False
    return isinstance(value, _PYTYPES[dtype])


def format_datetime(value: datetime, default_tz: str = "") -> str:
    text = value.strftime("%Y-%m-%dT%H:%M:%S")
    if value.microsecond:
        text += f".{value.microsecond:06d}".rstrip("0")
    off = value.utcoffset()
    if off is None:
        return text + default_tz
    minutes = int(off.total_seconds()) // 60
    sign = "+" if minutes >= 0 else "-"
    minutes = abs(minutes)
    return text + f"{sign}{minutes // 60:02d}:{minutes % 60:02d}"


def to_literal(value, column: Column, default_tz: str = "") -> Literal:
    dt = column.datatype
    if dt == "dateTime":
        lexical = format_datetime(value, default_tz)
    elif dt == "date":
        lexical = value.isoformat()
    elif dt == "boolean":
        lexical = "true" if value else "false"
    else:
        lexical = str(value)
    return Literal(lexical, DATATYPES[dt])


# -- rows -------------------------------------------------------------------


def read_csv(s: TableSchemaSet, table: str, text: str) -> Iterator[Row]:
    """Typed rows from one table's CSV text (header row = column names)."""
    schema = s[table]
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return
    for name in reader.fieldnames:
        schema.column(name)
    for record in reader:
        values = {}
        for c in schema.columns:
            values[c.name] = parse_value(record.get(c.name), c, table)
        yield Row(table, values)


def map_rows(s: TableSchemaSet, rows: Iterable[Row]) -> Graph:
    """Direct-map rows to a source graph; one type triple plus one triple per non-null cell."""
    a = Iri(RDF_TYPE)
    triples = set()
    seen = set()
    props: Dict[Tuple[str, str], Iri] = {}
    for row in rows:
        schema = s[row.table]
        pk_value = row.values.get(schema.primary_key)
        if pk_value is None:
            raise MappingError(f"row of {row.table} has a null primary key")
        if (row.table, pk_value) in seen:
            raise MappingError(f"duplicate primary key {pk_value!r} in {row.table}")
        seen.add((row.table, pk_value))
        subject = schema.resource_iri(pk_value)
        triples.add((subject, a, schema.class_iri))
        for col in schema.columns:
            value = row.values.get(col.name)
            if value is None:
                if not col.nullable:
                    raise MappingError(f"null value in non-nullable column {row.table}.{col.name}")
                continue
            if not _conforms(value, col.datatype):
                raise MappingError(f"value {value!r} does not conform to {col.datatype} in {row.table}.{col.name}")
            if col.name == schema.primary_key and not schema.expose_pk:
                continue
            prop = props.get((row.table, col.name))
            if prop is None:
                prop = props[(row.table, col.name)] = schema.property_iri(col.name)
            if col.foreign_key:
                obj = s[col.foreign_key[0]].resource_iri(value)
            else:
                obj = to_literal(value, col, schema.default_tz)
            triples.add((subject, prop, obj))
        unknown = set(row.values) - {c.name for c in schema.columns}
        if unknown:
            raise MappingError(f"row of {row.table} has unknown columns {sorted(unknown)}")
    g = Graph.trusted(triples)
    g.prefixes.update({"xsd": XSD})
    for t in s.tables.values():
        g.prefixes[t.name.lower()] = t.namespace
    return g


@dataclass
class SourceData:
    """A loaded Layer-1 source: schema plus typed rows per table."""

    schema: TableSchemaSet
    rows: Dict[str, List[Row]]

    def graph(self) -> Graph:
        return map_rows(self.schema, (r for rows in self.rows.values() for r in rows))


def load_source(manifest_path, data_dir=None) -> SourceData:
    """Read a manifest and the CSV file of every table it declares."""
    manifest_path = Path(manifest_path)
    data_dir = Path(data_dir) if data_dir else manifest_path.parent
    schema = load_schema(manifest_path.read_text(encoding="utf-8"))
    rows: Dict[str, List[Row]] = {}
    for name, t in schema.tables.items():
        path = data_dir / (t.csv or f"{name.lower()}.csv")
        if not path.exists():
            raise MappingError(f"data file {path} for table {name} not found")
        rows[name] = list(read_csv(schema, name, path.read_text(encoding="utf-8")))
    return SourceData(schema, rows)


def rows_from_dicts(table: str, records: Iterable[Mapping[str, object]]) -> List[Row]:
    return [Row(table, dict(r)) for r in records]
