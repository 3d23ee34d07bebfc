"""HTTP API mirroring the CLI configs.

Solves are asynchronous (a job id comes back immediately, results are
polled); the cheap evaluators answer synchronously.  Result bodies are
canonical JSON, byte-identical with the CLI for the same request.

Status codes: 400 schema violations (with field locations), 404 unknown
ids, 409 topologically infeasible solves without the override flag, 422
incompatible source/flux data.
"""

from __future__ import annotations

import os
from typing import Literal, Optional, Union

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import CrossFieldError, IncompatibilityError, InfeasibleTopologyError
from .jobs import JobStore, render_request_svg
from .serialization import canonical_json


class PresetSpec(BaseModel):
    kind: Literal["disk", "annulus", "ellipse", "polygon"]
    r: Optional[float] = None
    r1: Optional[float] = None
    r2: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    points: Optional[Union[str, list[list[float]]]] = None
    h: float = 0.05

    def to_request(self) -> dict:
        out = {"kind": self.kind, "h": self.h}
        for key in ("r", "r1", "r2", "a", "b", "points"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out


class MeshRef(BaseModel):
    mesh_id: Optional[str] = None
    preset: Optional[PresetSpec] = None
    msh: Optional[str] = None

    def to_request(self) -> dict:
        if self.mesh_id:
            return {"mesh_id": self.mesh_id}
        if self.msh is not None:
            return {"msh": self.msh}
        if self.preset is not None:
            return {"preset": self.preset.to_request()}
        raise ValueError("mesh needs one of mesh_id, preset, msh")


class HoleModel(BaseModel):
    center: list[float] = Field(min_length=2, max_length=2)
    radius: float = 0.0
    degree: int = 1
    single_triangle: bool = False


class SolveOptionsModel(BaseModel):
    space: Literal["CR", "P1"] = "CR"
    max_iter: int = 30
    tol: float = 1e-8
    gl_penalty: Optional[float] = None
    unit_norm_holes: Union[Literal["all"], list[int]] = []
    override_topology: bool = False


class SolveBody(BaseModel):
    mesh: MeshRef
    holes: list[HoleModel] = []
    options: SolveOptionsModel = SolveOptionsModel()

    def to_request(self) -> dict:
        return {
            "op": "solve",
            "mesh": self.mesh.to_request(),
            "holes": [h.model_dump() for h in self.holes],
            "options": self.options.model_dump(),
        }


class HolesBody(BaseModel):
    mesh: MeshRef
    holes: list[HoleModel] = []


class RenormBody(BaseModel):
    mesh: MeshRef
    points: list[list[float]]
    degrees: Optional[list[int]] = None
    signed: bool = False


class CornersBody(BaseModel):
    mesh: MeshRef
    corner_threshold: Optional[float] = None


class HFieldBody(BaseModel):
    mesh: MeshRef
    sources: list[list[float]]


def _canonical(payload: str) -> Response:
    return Response(content=payload, media_type="application/json")


def create_app(cache_dir: Optional[str] = None) -> FastAPI:
    store = JobStore(cache_dir=cache_dir or os.environ.get("CACHE_DIR"))
    app = FastAPI(title="crossfield", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        errors = [
            {"loc": [str(p) for p in e["loc"]], "msg": e["msg"]}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"errors": errors})

    @app.exception_handler(CrossFieldError)
    async def _domain_handler(request: Request, exc: CrossFieldError):
        status = 400
        content = {"error": str(exc)}
        if isinstance(exc, InfeasibleTopologyError):
            status = 409
            if exc.ledger is not None:
                content["ledger"] = exc.ledger.to_json()
        elif isinstance(exc, IncompatibilityError):
            status = 422
        return JSONResponse(status_code=status, content=content)

    @app.post("/api/mesh")
    def post_mesh(body: MeshRef):
        mesh_id = store.put_mesh(body.to_request())
        return {"mesh_id": mesh_id}

    @app.post("/api/solve")
    def post_solve(body: SolveBody):
        request = body.to_request()
        if "mesh_id" in request["mesh"]:
            # fail fast on unknown mesh ids instead of inside the worker
            if request["mesh"]["mesh_id"] not in store.mesh_store:
                return JSONResponse(status_code=404,
                                    content={"error": "unknown mesh_id"})
        job_id = store.submit(request)
        return {"job_id": job_id}

    @app.get("/api/result/{job_id}")
    def get_result(job_id: str):
        status, payload = store.status(job_id)
        if status is None:
            return JSONResponse(status_code=404, content={"error": "unknown id"})
        if status == "running":
            return {"status": "running"}
        if status == "error":
            exc = payload
            if isinstance(exc, CrossFieldError):
                code = 409 if isinstance(exc, InfeasibleTopologyError) else (
                    422 if isinstance(exc, IncompatibilityError) else 400
                )
                body = {"status": "error", "error": str(exc)}
                if isinstance(exc, InfeasibleTopologyError) and exc.ledger:
                    body["ledger"] = exc.ledger.to_json()
                return JSONResponse(status_code=code, content=body)
            return JSONResponse(
                status_code=500, content={"status": "error", "error": str(exc)}
            )
        return _canonical('{"result":' + payload + ',"status":"done"}')

    @app.get("/api/result/{job_id}/svg")
    def get_result_svg(job_id: str):
        status, payload = store.status(job_id)
        if status != "done":
            return JSONResponse(status_code=404, content={"error": "no result"})
        request = store.request_of(job_id)
        if request is None:
            return JSONResponse(status_code=404, content={"error": "no request"})
        import json as _json

        svg_text = render_request_svg(
            request, _json.loads(payload), store.mesh_store
        )
        return Response(content=svg_text, media_type="image/svg+xml")

    def _sync(op: str, request: dict) -> Response:
        request["op"] = op
        job_id = store.run_sync(request)
        status, payload = store.status(job_id)
        if status == "error":
            raise payload
        return _canonical(payload)

    @app.post("/api/energy/holes")
    def post_energy_holes(body: HolesBody):
        return _sync("energy_holes", {
            "mesh": body.mesh.to_request(),
            "holes": [h.model_dump() for h in body.holes],
        })

    @app.post("/api/energy/renorm")
    def post_energy_renorm(body: RenormBody):
        request = {
            "mesh": body.mesh.to_request(),
            "points": body.points,
            "signed": body.signed,
        }
        if body.degrees is not None:
            request["degrees"] = body.degrees
        return _sync("energy_renorm", request)

    @app.post("/api/corners")
    def post_corners(body: CornersBody):
        request = {"mesh": body.mesh.to_request()}
        if body.corner_threshold is not None:
            request["corner_threshold"] = body.corner_threshold
        return _sync("corners", request)

    @app.post("/api/check")
    def post_check(body: HolesBody):
        return _sync("check", {
            "mesh": body.mesh.to_request(),
            "holes": [h.model_dump() for h in body.holes],
        })

    @app.post("/api/hfield")
    def post_hfield(body: HFieldBody):
        return _sync("hfield", {
            "mesh": body.mesh.to_request(),
            "sources": body.sources,
        })

    return app


def serve(host: str = "127.0.0.1", port: int = 8787,
          cache_dir: Optional[str] = None):
    import uvicorn

    uvicorn.run(create_app(cache_dir=cache_dir), host=host, port=port)
