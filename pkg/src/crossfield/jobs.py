"""Shared job pipeline for the CLI and the HTTP service.

A job request is a plain dict; its canonical JSON is hashed to give the
content address, so identical requests return cached, byte-identical
results.  Timing and other run-dependent diagnostics never enter the
canonical result.
"""

from __future__ import annotations

import hashlib
import math
import os
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import svg as svgmod
from .conjugate import solve_conjugate
from .corners import assign_boundary_singularities, classify_corner
from .energy import SingularityConfig, hole_energy, renormalized_energy
from .errors import CrossFieldError, GeometryError
from .estimators import CrossFieldSolver
from .mesh import (
    DEFAULT_CORNER_THRESHOLD,
    Mesh,
    boundary_analysis,
    drill_holes,
    parse_msh,
    preset_domain,
)
from .serialization import canonical_json
from .solver import detect_singular_triangles, extract_crosses
from .topology import ph_check
from .validation import as_hole_specs

DEFAULT_EDGE_LENGTH = 0.05


def request_hash(request: dict) -> str:
    return hashlib.sha256(canonical_json(request).encode()).hexdigest()[:24]


def mesh_from_request(mesh_cfg: dict, mesh_store: Optional[dict] = None) -> Mesh:
    """Materialize a mesh from a preset spec, raw MSH text, or a store id."""
    if not isinstance(mesh_cfg, dict):
        raise GeometryError("mesh must be an object")
    if "mesh_id" in mesh_cfg:
        if not mesh_store or mesh_cfg["mesh_id"] not in mesh_store:
            raise KeyError(mesh_cfg["mesh_id"])
        return mesh_store[mesh_cfg["mesh_id"]]
    if "msh" in mesh_cfg:
        return parse_msh(mesh_cfg["msh"])
    if "preset" in mesh_cfg:
        p = dict(mesh_cfg["preset"])
        kind = p.pop("kind")
        h = float(p.pop("h", DEFAULT_EDGE_LENGTH))
        return preset_domain(kind, target_edge_length=h, **p)
    raise GeometryError("mesh needs one of: preset, msh, mesh_id")


def _opts_from(options: Optional[dict]) -> dict:
    options = options or {}
    unit = options.get("unit_norm_holes", ())
    if isinstance(unit, list):
        unit = tuple(unit)
    return {
        "space": options.get("space", "CR"),
        "max_iter": int(options.get("max_iter", 30)),
        "tol": float(options.get("tol", 1e-8)),
        "gl_penalty": options.get("gl_penalty"),
        "unit_norm_holes": unit,
        "override_topology": bool(options.get("override_topology", False)),
    }


def run_solve(request: dict, mesh_store=None) -> dict:
    mesh = mesh_from_request(request.get("mesh", {}), mesh_store)
    holes = as_hole_specs(request.get("holes", []))
    est = CrossFieldSolver(holes=holes, **_opts_from(request.get("options")))
    est.fit(mesh)
    angles, norms, zero = extract_crosses(est.field_)
    singular = detect_singular_triangles(est.field_)
    return {
        "field": est.field_.to_json(),
        "report": est.report_.to_json(),
        "ledger": est.ledger_.to_json(),
        "measured_degrees": {
            str(k): v for k, v in _jsonable_degrees(est.degrees_).items()
        },
        "singular_triangles": [
            {"triangle": int(t), "index": None if q is None else float(q)}
            for t, q in singular
        ],
        "dirichlet_energy": est.report_.dirichlet_energy,
    }


def _jsonable_degrees(degs: dict) -> dict:
    out = {}
    for k, v in degs.items():
        out[k] = {
            "degree": None if v["degree"] is None else float(v["degree"]),
            "min_norm": v["min_norm"],
            "max_norm": v["max_norm"],
            "degenerate": v["degenerate"],
        }
    return out


def run_check(request: dict, mesh_store=None) -> dict:
    mesh = mesh_from_request(request.get("mesh", {}), mesh_store)
    holes = as_hole_specs(request.get("holes", []))
    ledger = ph_check(mesh, holes)
    return {"ledger": ledger.to_json(), "verdict": ledger.verdict}


def run_corners(request: dict, mesh_store=None) -> dict:
    mesh = mesh_from_request(request.get("mesh", {}), mesh_store)
    threshold = float(request.get("corner_threshold", DEFAULT_CORNER_THRESHOLD))
    corners, smooth, chi = boundary_analysis(mesh, threshold)
    assignment = assign_boundary_singularities(
        [c.interior_angle for c in corners], chi
    )
    per_corner = []
    for c, k in zip(corners, assignment.indices):
        per_corner.append(
            {
                "vertex": c.vertex,
                "angle": c.interior_angle,
                "scenario": assignment.scenario,
                "admissible_k": [
                    str(q)
                    for q in classify_corner(c.interior_angle, assignment.scenario)
                ],
                "chosen_k": str(k),
            }
        )
    return {
        "chi": chi,
        "corners": per_corner,
        "scenario": assignment.scenario,
        "interior": assignment.interior.to_json(),
        "energy": assignment.energy,
    }


def run_energy_holes(request: dict, mesh_store=None) -> dict:
    mesh = mesh_from_request(request.get("mesh", {}), mesh_store)
    holes = as_hole_specs(request.get("holes", []))
    drilled = drill_holes(mesh, holes)
    value = hole_energy(drilled)
    core = sum(
        math.pi * abs(h.degree) * abs(math.log(h.radius))
        for h in holes
        if h.radius > 0
    )
    return {"e_rho": value, "core": core, "holes": [h.to_json() for h in holes]}


def run_energy_renorm(request: dict, mesh_store=None) -> dict:
    mesh = mesh_from_request(request.get("mesh", {}), mesh_store)
    pts = request.get("points", [])
    config = SingularityConfig(
        points=tuple((float(p[0]), float(p[1])) for p in pts),
        degrees=tuple(int(d) for d in request.get("degrees", [1] * len(pts))),
    )
    report = renormalized_energy(mesh, config, signed=bool(request.get("signed")))
    return {"energy": report.to_json()}


def run_hfield(request: dict, mesh_store=None) -> dict:
    mesh = mesh_from_request(request.get("mesh", {}), mesh_store)
    sources = [
        ((float(s[0]), float(s[1])), Fraction(int(s[2]), 1))
        for s in request.get("sources", [])
    ]
    sol = solve_conjugate(mesh, sources)
    return {"hfield": sol.to_json()}


_RUNNERS = {
    "solve": run_solve,
    "check": run_check,
    "corners": run_corners,
    "energy_holes": run_energy_holes,
    "energy_renorm": run_energy_renorm,
    "hfield": run_hfield,
}


def run_request(request: dict, mesh_store=None) -> dict:
    op = request.get("op")
    if op not in _RUNNERS:
        raise GeometryError(f"unknown op {op!r}")
    return _RUNNERS[op](request, mesh_store)


def render_request_svg(request: dict, result: dict, mesh_store=None) -> str:
    """Best-effort SVG for a finished job."""
    op = request.get("op")
    mesh = mesh_from_request(request.get("mesh", {}), mesh_store)
    if op == "solve":
        holes = as_hole_specs(request.get("holes", []))
        drilled = drill_holes(mesh, holes) if holes else mesh
        from .assembly import build_space

        space = build_space(drilled, result["field"]["space"])
        values = np.array(result["field"]["values"])
        angles = np.mod(np.arctan2(values[:, 1], values[:, 0]) / 4, np.pi / 2)
        norms = np.hypot(values[:, 0], values[:, 1]) ** 0.25
        return svgmod.render_field_svg(
            drilled, space.sites, angles, norms, holes=holes,
            site_norm_raw=np.hypot(values[:, 0], values[:, 1]),
        )
    if op == "hfield":
        values = np.array(result["hfield"]["values"])
        return svgmod.render_scalar_svg(mesh, values)
    raise GeometryError(f"no SVG renderer for op {op!r}")


@dataclass
class JobStore:
    """Content-addressed result store with optional on-disk cache."""

    cache_dir: Optional[str] = None
    mesh_store: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _results: dict = field(default_factory=dict)
    _errors: dict = field(default_factory=dict)
    _running: set = field(default_factory=set)

    def put_mesh(self, body: dict) -> str:
        mesh_id = "m" + request_hash(body)
        with self._lock:
            if mesh_id not in self.mesh_store:
                self.mesh_store[mesh_id] = mesh_from_request(body)
        return mesh_id

    def submit(self, request: dict) -> str:
        job_id = request_hash(request)
        with self._lock:
            if job_id in self._results or job_id in self._running:
                return job_id
            cached = self._read_cache(job_id)
            if cached is not None:
                self._results[job_id] = (request, cached)
                return job_id
            self._running.add(job_id)
        thread = threading.Thread(
            target=self._run, args=(job_id, request), daemon=True
        )
        thread.start()
        return job_id

    def run_sync(self, request: dict) -> str:
        job_id = request_hash(request)
        with self._lock:
            if job_id in self._results:
                return job_id
            cached = self._read_cache(job_id)
            if cached is not None:
                self._results[job_id] = (request, cached)
                return job_id
        self._run(job_id, request)
        return job_id

    def _run(self, job_id: str, request: dict):
        try:
            result = run_request(request, self.mesh_store)
        except Exception as exc:  # surfaced via status, not lost in the thread
            with self._lock:
                self._errors[job_id] = exc
                self._running.discard(job_id)
            return
        payload = canonical_json(result)
        with self._lock:
            self._results[job_id] = (request, payload)
            self._running.discard(job_id)
        self._write_cache(job_id, payload)

    def status(self, job_id: str):
        with self._lock:
            if job_id in self._results:
                return "done", self._results[job_id][1]
            if job_id in self._errors:
                return "error", self._errors[job_id]
            if job_id in self._running:
                return "running", None
        cached = self._read_cache(job_id)
        if cached is not None:
            return "done", cached
        return None, None

    def request_of(self, job_id: str) -> Optional[dict]:
        with self._lock:
            entry = self._results.get(job_id)
        return entry[0] if entry else None

    def _cache_path(self, job_id: str):
        if not self.cache_dir:
            return None
        return os.path.join(self.cache_dir, f"{job_id}.json")

    def _read_cache(self, job_id: str):
        path = self._cache_path(job_id)
        if path and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                return fh.read()
        return None

    def _write_cache(self, job_id: str, payload: str):
        path = self._cache_path(job_id)
        if path:
            os.makedirs(self.cache_dir, exist_ok=True)
            tmp = path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)
