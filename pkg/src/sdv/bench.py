"""Conversion throughput benchmark over seeded synthetic data.

For each size the diagnosis dataset is generated and mapped (untimed),
then the converted entity is produced repeatedly. Retrieval is the
production of its input entities; conversion is rule application over
them. Reported times are medians over the repetitions.

Reference points from the original deployment, not gates: 279 records/s
for diagnoses and 682 records/s for lab results.
"""

from __future__ import annotations

import csv
import gc
import io
import statistics
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import List, Optional, Sequence, Tuple

from sdv.rules import apply_rules
from sdv.service.config import load_service_config
from sdv.service.producer import EntityService
from sdv.synth import generate, rows_for_triples

REFERENCE_RECORDS_PER_S = {"diagnosis": 279.0, "lab": 682.0}


@dataclass
class BenchRow:
    size: int
    records: int
    input_triples: int
    retrieve_s: float
    convert_s: float
    total_s: float
    records_per_s: float
    derived_triples: int
    derived_triples_per_s: float


class _NoGC:
    def __enter__(self):
        self.was = gc.isenabled()
        gc.collect()
        gc.disable()

    def __exit__(self, *exc):
        if self.was:
            gc.enable()


def _convert_once(svc: EntityService, entity: str, params: dict) -> Tuple[float, float, int, int]:
    cfg = svc.resolve(entity)
    t0 = time.perf_counter()
    graphs, sources = svc.inputs(entity, params)
    t1 = time.perf_counter()
    conv = apply_rules(graphs, cfg.rules, mode=cfg.mode, sources=sources)
    t2 = time.perf_counter()
    n_in = sum(len(g) for g in graphs)
    return t1 - t0, t2 - t1, n_in, len(conv.graph)


def measure(svc: EntityService, entity: str, partitions: Optional[Sequence[str]] = None) -> Tuple[float, float, int, int]:
    """(retrieve seconds, convert seconds, input triples, derived triples) for one production.

    With partitions the sub-entities run concurrently; times are summed
    over sub-requests and derived triples counted on the union.
    """
    if not partitions:
        return _convert_once(svc, entity, {})
    cfg = svc.resolve(entity)

    def one(value):
        params = {cfg.partition: value}
        t0 = time.perf_counter()
        graphs, sources = svc.inputs(entity, params)
        t1 = time.perf_counter()
        conv = apply_rules(graphs, cfg.rules, mode=cfg.mode, sources=sources)
        t2 = time.perf_counter()
        return t1 - t0, t2 - t1, sum(len(g) for g in graphs), conv.graph

    with ThreadPoolExecutor(max_workers=len(partitions)) as pool:
        parts = list(pool.map(one, partitions))
    union = parts[0][3].union(*(p[3] for p in parts[1:]))
    return sum(p[0] for p in parts), sum(p[1] for p in parts), sum(p[2] for p in parts), len(union)


def bench_size(size: int, entity: str = "diagnosis", reps: int = 3, partitions: int = 1, seed: int = 0, workdir=None) -> BenchRow:
    """Benchmark one size, given in input triples."""
    if partitions not in (1, 12):
        raise ValueError("the synthetic year splits into monthly sub-entities: partitions must be 1 or 12")
    rows = rows_for_triples(size)
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        ds = generate(tmp, rows, seed=seed)
        svc = EntityService(load_service_config(ds.service_ini))
    periods = ds.periods if partitions == 12 else None
    samples = []
    for _ in range(max(1, reps)):
        with _NoGC():
            samples.append(measure(svc, entity, periods))
    retrieve = statistics.median(s[0] for s in samples)
    convert = statistics.median(s[1] for s in samples)
    n_in, n_derived = samples[0][2], samples[0][3]
    total = retrieve + convert
    del svc
    gc.collect()
    return BenchRow(
        size=size,
        records=rows,
        input_triples=n_in,
        retrieve_s=retrieve,
        convert_s=convert,
        total_s=total,
        records_per_s=rows / total if total > 0 else 0.0,
        derived_triples=n_derived,
        derived_triples_per_s=n_derived / convert if convert > 0 else 0.0,
    )


def run(sizes: Sequence[int], entity: str = "diagnosis", reps: int = 3, partitions: int = 1, seed: int = 0, progress=None) -> List[BenchRow]:
    out = []
    for size in sizes:
        row = bench_size(size, entity, reps, partitions, seed)
        if progress:
            progress(row)
        out.append(row)
    return out


def to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(BenchRow)]
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for r in rows:
        d = asdict(r)
        w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in d.items()})
    return buf.getvalue()
