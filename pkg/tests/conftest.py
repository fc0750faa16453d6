import configparser
import dataclasses
import os
import shutil
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest
from fastapi.testclient import TestClient

from sdv.rdf import parse_turtle
from sdv.service import EntityService, load_service_config
from sdv.service.app import create_app
from sdv.synth import fixture_dir

GOLDEN = fixture_dir("golden")
EXPECTED = Path(__file__).parent / "golden"
PATIENT = "http://example.org/resource/Patient/1001"

# criterion number -> (passed, detail); printed at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def expected():
    return {
        "source": parse_turtle((EXPECTED / "source_entity.ttl").read_text()),
        "domain": parse_turtle((EXPECTED / "domain_entity.ttl").read_text()),
        "application": parse_turtle((EXPECTED / "application_entity.ttl").read_text()),
        "person_csv": (EXPECTED / "person_table.csv").read_bytes(),
    }


def inprocess_service(ini=GOLDEN / "service.ini", **overrides):
    cfg = load_service_config(ini)
    cfg = dataclasses.replace(cfg, fetch="inprocess", base_url="http://testserver", **overrides)
    return EntityService(cfg)


@pytest.fixture(scope="session")
def golden_service():
    return inprocess_service()


@pytest.fixture(scope="session")
def client(golden_service):
    return TestClient(create_app(golden_service))


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def copy_golden(dest: Path, port: int = 8000) -> Path:
    """A writable copy of the golden fixture whose base URL matches ``port``."""
    shutil.copytree(GOLDEN, dest)
    ini = dest / "service.ini"
    cp = configparser.ConfigParser()
    cp.read(ini)
    cp["service"]["base_url"] = f"http://127.0.0.1:{port}"
    cp["service"]["port"] = str(port)
    with ini.open("w") as f:
        cp.write(f)
    return ini


@pytest.fixture(scope="session")
def live_server(tmp_path_factory):
    """``sdv serve`` in a subprocess, fetching inputs over loopback HTTP."""
    port = free_port()
    ini = copy_golden(tmp_path_factory.mktemp("live") / "golden", port)
    proc = subprocess.Popen(
        [sys.executable, "-m", "sdv.cli", "serve", "--config", str(ini)],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        env={**os.environ, "PYTHONUNBUFFERED": "1"},
    )
    base = f"http://127.0.0.1:{port}"
    deadline = time.time() + 20
    while time.time() < deadline:
        try:
            if httpx.get(base + "/entities", timeout=1).status_code == 200:
                break
        except httpx.HTTPError:
            time.sleep(0.1)
        if proc.poll() is not None:
            raise RuntimeError(proc.stderr.read().decode())
    else:
        proc.kill()
        raise RuntimeError("server did not start")
    yield base
    proc.terminate()
    try:
        proc.wait(timeout=10)
    except subprocess.TimeoutExpired:
        proc.kill()
