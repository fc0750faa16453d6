"""HTTP surface of the entity service (GET-only)."""

from __future__ import annotations

import logging
from contextlib import asynccontextmanager
from email.parser import BytesParser
from email.policy import HTTP
from typing import Dict, List, Optional, Tuple

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from sdv.rdf import graph_hash, serialize_turtle
from sdv.service.config import ServiceConfig, load_service_config
from sdv.service.producer import PROVENANCE_HEADER, EntityError, EntityService

log = logging.getLogger(__name__)

TURTLE = "text/turtle; charset=utf-8"
RESERVED_PARAMS = ("proof",)


class ErrorBody(BaseModel):
    status: int
    error: str
    entity: Optional[str] = None
    url: Optional[str] = None
    rule: Optional[str] = None


class EntityMeta(BaseModel):
    path: str
    kind: str
    description: str = ""
    required: List[str] = []
    optional: List[str] = []
    inputs: List[str] = []
    rules: List[str] = []
    filter: Optional[str] = None
    mode: Optional[str] = None
    partition: Optional[str] = None


class EntityListing(BaseModel):
    entities: List[EntityMeta]
    disabled: Dict[str, str] = {}


def _error(e: EntityError) -> JSONResponse:
    body = ErrorBody(
        status=e.status,
        error=e.message,
        entity=e.detail.get("entity"),
        url=e.detail.get("url"),
        rule=e.detail.get("rule"),
    )
    return JSONResponse(body.model_dump(exclude_none=True), status_code=e.status)


def multipart(parts: List[Tuple[str, bytes]], boundary: str) -> bytes:
    out = b""
    for ctype, payload in parts:
        out += f"--{boundary}\r\nContent-Type: {ctype}\r\n\r\n".encode() + payload + b"\r\n"
    return out + f"--{boundary}--\r\n".encode()


def split_multipart(content_type: str, body: bytes) -> List[Tuple[str, bytes]]:
    """Parts of a multipart body as (content type, payload); for clients and tests."""
    msg = BytesParser(policy=HTTP).parsebytes(f"Content-Type: {content_type}\r\n\r\n".encode() + body)
    return [(p.get_content_type(), p.get_payload(decode=True)) for p in msg.iter_parts()]


def create_app(service: EntityService) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        service.close()

    app = FastAPI(title="Semantic data virtualization entity service", lifespan=lifespan)
    app.state.service = service

    @app.exception_handler(EntityError)
    async def entity_error(_: Request, e: EntityError):
        return _error(e)

    @app.get("/entities", response_model=EntityListing)
    def list_entities():
        metas = [EntityMeta(**service.describe(p)) for p in sorted(service.entities)]
        return EntityListing(entities=metas, disabled=dict(sorted(service.errors.items())))

    @app.get("/entities/{path:path}/meta", response_model=EntityMeta)
    def entity_meta(path: str):
        return EntityMeta(**service.describe(path))

    @app.get("/entities/{path:path}")
    def get_entity(path: str, request: Request):
        params = {k: v for k, v in request.query_params.items() if k not in RESERVED_PARAMS}
        want_proof = request.query_params.get("proof", "false").lower() in ("true", "1", "yes")
        result = service.produce(path, params, want_proof=want_proof)
        body = serialize_turtle(result.graph).encode("utf-8")
        etag = f'"{graph_hash(result.graph)}"'
        headers = {"ETag": etag}
        if result.provenance:
            headers[PROVENANCE_HEADER] = " ".join(result.provenance)
        if request.headers.get("if-none-match") == etag and not want_proof:
            return Response(status_code=304, headers=headers)
        if want_proof and result.proof is not None:
            boundary = "sdv-" + etag.strip('"')[:24]
            payload = multipart(
                [(TURTLE, body), ("application/json", result.proof.dumps().encode("utf-8"))], boundary
            )
            return Response(payload, media_type=f'multipart/mixed; boundary="{boundary}"', headers=headers)
        return Response(body, media_type=TURTLE, headers=headers)

    return app


def app_from_config(path) -> FastAPI:
    cfg: ServiceConfig = load_service_config(path)
    return create_app(EntityService(cfg))
