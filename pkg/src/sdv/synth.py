"""Seeded synthetic diagnosis data for benchmarks and partition tests.

The generated schema has a PATIENT table and a DIAGNOSIS table whose
``period`` column (``YYYY-MM``) lets the diagnosis entity be split into
monthly sub-entities.
"""

from __future__ import annotations

import calendar
import csv
import random
import shutil
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List

ICD10 = ["E11.9", "I10", "J45.909", "K21.9", "M54.5", "N39.0", "F32.9", "E78.5", "J06.9", "I25.10"]
KINDS = ["primary", "secondary"]
GENDERS = ["female", "male", "unknown"]

# expected source-entity triples per diagnosis row (a null severity drops one)
NULL_SEVERITY = 0.3
TRIPLES_PER_ROW = 6 - NULL_SEVERITY
PATIENTS_PER_ROW = 0.25
INPUT_TRIPLES_PER_ROW = TRIPLES_PER_ROW + 2 * PATIENTS_PER_ROW


def fixture_dir(name: str) -> Path:
    return Path(str(resources.files("sdv") / "fixtures" / name))


@dataclass
class Dataset:
    root: Path
    service_ini: Path
    rows: int
    patients: int
    year: int

    @property
    def periods(self) -> List[str]:
        return [f"{self.year}-{m:02d}" for m in range(1, 13)]


def rows_for_triples(n_triples: int) -> int:
    """Diagnosis rows giving roughly ``n_triples`` input triples to the diagnosis entity."""
    return max(0, round(n_triples / INPUT_TRIPLES_PER_ROW))


def generate(out_dir, rows: int, seed: int = 0, year: int = 2020) -> Dataset:
    """Write CSVs, the manifest and a ``service.ini`` (in-process fetching) to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    n_patients = max(1, int(rows * PATIENTS_PER_ROW)) if rows else 0

    with (out / "patient.csv").open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["id", "gender", "birthdate"])
        for pid in range(1, n_patients + 1):
            born = f"{rng.randint(1930, 2015)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d} 00:00:00"
            w.writerow([pid, rng.choice(GENDERS), born])

    with (out / "diagnosis.csv").open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["id", "patient", "code", "kind", "severity", "diagnosed", "period"])
        for did in range(1, rows + 1):
            month = rng.randint(1, 12)
            day = rng.randint(1, calendar.monthrange(year, month)[1])
            stamp = f"{year}-{month:02d}-{day:02d} {rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:00"
            severity = "" if rng.random() < NULL_SEVERITY else rng.randint(1, 5)
            w.writerow(
                [
                    did,
                    rng.randint(1, n_patients),
                    rng.choice(ICD10),
                    rng.choice(KINDS),
                    severity,
                    stamp,
                    f"{year}-{month:02d}",
                ]
            )

    src = fixture_dir("synthetic")
    shutil.copyfile(src / "manifest.ini", out / "manifest.ini")
    ini = out / "service.ini"
    ini.write_text(
        "[service]\n"
        f"entities = {src / 'entities'}\n"
        "source_manifest = manifest.ini\n"
        "base_url = http://127.0.0.1:8000\n"
        "fetch = inprocess\n",
        encoding="utf-8",
    )
    return Dataset(out, ini, rows, n_patients, year)
