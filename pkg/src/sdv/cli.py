"""Command line entry point.

Exit codes (frozen):

    0  success
    1  unexpected internal error
    2  usage error
    3  configuration invalid
    4  unknown entity (HTTP 404 equivalent)
    5  bad request, e.g. a missing required parameter (HTTP 400)
    6  input fetch failure (HTTP 502)
    7  rule or builtin evaluation error (HTTP 500)
    8  proof rejected
    9  file I/O error
"""

from __future__ import annotations

import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Dict, Optional, Tuple

import click

from sdv.rdf import parse_turtle, serialize_turtle

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_NOT_FOUND = 4
EXIT_BAD_REQUEST = 5
EXIT_FETCH = 6
EXIT_CONVERSION = 7
EXIT_PROOF_INVALID = 8
EXIT_IO = 9

STATUS_EXIT = {404: EXIT_NOT_FOUND, 400: EXIT_BAD_REQUEST, 502: EXIT_FETCH, 500: EXIT_CONVERSION}


def default_config() -> Path:
    from sdv.synth import fixture_dir

    return fixture_dir("golden") / "service.ini"


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _params(pairs: Tuple[str, ...]) -> Dict[str, str]:
    out = {}
    for p in pairs:
        if "=" not in p:
            raise click.BadParameter(f"expected k=v, got {p!r}", param_hint="--param")
        k, v = p.split("=", 1)
        out[k] = v
    return out


def _service(config: Optional[str], inprocess: bool = True):
    from sdv.service import ConfigError, EntityService, load_service_config

    try:
        cfg = load_service_config(config or default_config())
    except ConfigError as e:
        _fail(EXIT_CONFIG, str(e))
    if inprocess:
        cfg = dataclasses.replace(cfg, fetch="inprocess")
    try:
        return EntityService(cfg)
    except (ValueError, OSError) as e:
        _fail(EXIT_CONFIG, f"cannot load source data: {e}")


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="")
    except OSError as e:
        _fail(EXIT_IO, f"cannot write {path}: {e}")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log debug output.")
def main(verbose: bool):
    """Semantic data virtualization: entities, conversions, proofs and ETL."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--config", "config", type=click.Path(dir_okay=False), help="service.ini (default: golden fixture)")
@click.option("--host", default=None, help="Listen address (overrides the config).")
@click.option("--port", type=int, default=None, help="Listen port (overrides the config).")
@click.option("--check", is_flag=True, help="Validate the configuration and exit.")
def serve(config, host, port, check):
    """Serve the entity API; refuses to start if any entity is invalid."""
    svc = _service(config, inprocess=False)
    if svc.errors:
        lines = [f"  {path}: {msg}" for path, msg in sorted(svc.errors.items())]
        _fail(EXIT_CONFIG, "invalid entity configuration:\n" + "\n".join(lines))
    click.echo(f"{len(svc.entities)} entities valid", err=True)
    if check:
        return
    import uvicorn

    from sdv.service.app import create_app

    cfg = svc.config
    try:
        uvicorn.run(create_app(svc), host=host or cfg.host, port=port or cfg.port, log_level="warning")
    except OSError as e:
        _fail(EXIT_IO, f"cannot listen: {e}")


@main.command()
@click.argument("entity")
@click.option("--config", "config", type=click.Path(dir_okay=False))
@click.option("--param", "-p", "params", multiple=True, help="Entity parameter k=v (repeatable).")
@click.option("--out", type=click.Path(dir_okay=False), help="Turtle output file (default: stdout).")
@click.option("--proof-out", type=click.Path(dir_okay=False), help="Write the proof JSON here.")
@click.option("--all-justifications", is_flag=True, help="Record every firing in the proof, not only the first per triple.")
@click.option("--http", "use_http", is_flag=True, help="Fetch inputs over HTTP instead of in-process.")
def run(entity, config, params, out, proof_out, all_justifications, use_http):
    """Produce ENTITY offline and write canonical Turtle."""
    from sdv.service import EntityError

    svc = _service(config, inprocess=not use_http)
    try:
        result = svc.produce(entity, _params(params), want_proof=bool(proof_out), all_justifications=all_justifications)
    except EntityError as e:
        _fail(STATUS_EXIT.get(e.status, EXIT_INTERNAL), f"error {e.status}: {e.message}")
    text = serialize_turtle(result.graph)
    if out:
        _write(out, text)
    else:
        click.echo(text, nl=False)
    if proof_out:
        if result.proof is None:
            _fail(EXIT_BAD_REQUEST, f"{entity} is a source entity; it has no proof")
        _write(proof_out, result.proof.dumps())
    for w in result.warnings:
        click.echo(f"warning: {w}", err=True)


@main.command()
@click.option("--proof", "proof_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--rules", "rule_paths", required=True, multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--input", "inputs", required=True, multiple=True, help="[ID=]PATH of an asserted Turtle graph.")
def verify(proof_path, rule_paths, inputs):
    """Check a proof against its asserted inputs and rule files.

    Inputs without an ID are matched to the proof's sources in order.
    Rule ids are formed from the rule file names, as when the proof was made.
    """
    from sdv.rules import RuleSet, check_proof, parse_rules

    try:
        proof_text = Path(proof_path).read_text(encoding="utf-8")
        rules = None
        for rp in rule_paths:
            rs = parse_rules(Path(rp).read_text(encoding="utf-8"), source=Path(rp).name)
            rules = rs if rules is None else rules + rs
        named, ordered = {}, []
        for spec in inputs:
            ident, sep, path = spec.rpartition("=") if "=" in spec and not Path(spec).exists() else ("", "", spec)
            g = parse_turtle(Path(path).read_text(encoding="utf-8"))
            if sep:
                named[ident] = g
            else:
                ordered.append(g)
    except OSError as e:
        _fail(EXIT_IO, str(e))
    except ValueError as e:
        _fail(EXIT_USAGE, f"cannot read inputs: {e}")
    if named and ordered:
        _fail(EXIT_USAGE, "give every --input an ID, or none")
    verdict = check_proof(proof_text, named or ordered, rules or RuleSet([]))
    if not verdict:
        _fail(EXIT_PROOF_INVALID, str(verdict))
    click.echo("valid")


@main.command()
@click.argument("entity", default="diagnosis")
@click.option("--sizes", default="10000,100000,1000000", help="Comma separated sizes in input triples.")
@click.option("--reps", default=3, show_default=True)
@click.option("--partitions", default=1, show_default=True, help="1, or 12 monthly sub-entities.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="CSV report (default: stdout).")
def bench(entity, sizes, reps, partitions, seed, out):
    """Time retrieval and conversion over seeded synthetic data."""
    from sdv import bench as bench_mod

    try:
        size_list = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter("sizes must be integers", param_hint="--sizes")

    def progress(row):
        click.echo(
            f"size={row.size} records={row.records} retrieve={row.retrieve_s:.3f}s "
            f"convert={row.convert_s:.3f}s derived/s={row.derived_triples_per_s:.0f}",
            err=True,
        )

    try:
        rows = bench_mod.run(size_list, entity, reps, partitions, seed, progress=progress)
    except ValueError as e:
        _fail(EXIT_USAGE, str(e))
    text = bench_mod.to_csv(rows)
    if out:
        _write(out, text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("entity")
@click.option("--config", "config", type=click.Path(dir_okay=False))
@click.option("--target", "target", required=True, type=click.Path(exists=True, dir_okay=False), help="Target table spec.")
@click.option("--param", "-p", "params", multiple=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--policy", type=click.Choice(["skip", "replace"]), default="skip", show_default=True)
def load(entity, config, target, params, out_dir, policy):
    """Project ENTITY into a target table and load it into OUT_DIR."""
    from sdv.etl import EtlError, load_target_spec, project_and_load
    from sdv.service import EntityError

    svc = _service(config)
    try:
        spec = load_target_spec(target)
        result = svc.produce(entity, _params(params))
        _, report = project_and_load(result.graph, spec, out_dir, policy)
    except EntityError as e:
        _fail(STATUS_EXIT.get(e.status, EXIT_INTERNAL), f"error {e.status}: {e.message}")
    except EtlError as e:
        _fail(EXIT_BAD_REQUEST, str(e))
    except OSError as e:
        _fail(EXIT_IO, str(e))
    click.echo(json.dumps({k: v for k, v in report.to_json().items() if k != "rejections"}))


if __name__ == "__main__":
    main()
